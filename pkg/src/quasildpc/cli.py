"""Command-line entry point: quantize, decode, simulate and trapset subcommands.

Exit status is 0 on success, 1 on a usage error and 2 on a data error
(unreadable file, malformed alist, invalid parameter value).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import ScaleMode
from .decoder import ALGORITHMS, DecoderConfig, decode
from .montecarlo import SweepConfig, default_workers, records_to_csv, records_to_jsonl, run_sweep
from .quantizer import QuantizerSpec, format_csv, format_table, interval_table
from .tanner import make_regular_code, read_alist
from .trapset import (
    MagnitudePolicy,
    classify,
    embed_four_four_set,
    enumerate_small,
    idealized_growth,
    k_separation,
    trapping_experiment,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _sweep(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) == 1:
        return [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:step:stop, got {text!r}")
    start, step, stop = (float(x) for x in parts)
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}: need step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_graph_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--alist", help="parity-check matrix in alist format")
    g.add_argument("--code", help="regular PEG code n:dv:dc[:seed], e.g. 504:3:6:7")


def _add_decoder_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alg", default="ms", help=f"one of {', '.join(sorted(ALGORITHMS))} (spa = spa_boxplus)")
    p.add_argument("--alpha", type=float, default=0.75, help="AMS attenuation")
    p.add_argument("--beta", type=float, default=0.5, help="OMS offset")
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--quant", default="none", help="kind:delta:q:d[:nu], uniform:delta:q, or none")
    p.add_argument("--no-quant-channel", action="store_true", help="leave channel LLRs unquantized")
    p.add_argument("--no-stop", action="store_true", help="always run max-iters iterations")
    p.add_argument("--backend", choices=("numba", "numpy"), default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="quasildpc", description="Quantized LDPC message-passing decoders and error-floor tools.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("quantize", help="print a quantizer's interval table")
    q.add_argument("--kind", default="quasi", help="uniform, quasi or gen")
    q.add_argument("--delta", type=float, required=True)
    q.add_argument("--q", type=int, required=True)
    q.add_argument("--d", type=float, default=2.0)
    q.add_argument("--nu", type=int, default=None, help="uniform magnitudes for the generalized kind")
    q.add_argument("--csv", action="store_true", help="CSV instead of an aligned table")
    q.add_argument("--out")

    d = sub.add_parser("decode", help="decode one LLR vector")
    _add_graph_args(d)
    d.add_argument("--llr", required=True, help="file with one LLR per line")
    _add_decoder_args(d)
    d.add_argument("--out")

    s = sub.add_parser("simulate", help="Monte Carlo FER/BER sweep")
    s.add_argument("--config", help="JSON file of defaults (e.g. a previous run's manifest)")
    _add_graph_args(s, required=False)
    s.add_argument("--channel", choices=("awgn", "bsc"))
    s.add_argument("--ebn0", type=_sweep, help="start:step:stop or a comma list (dB)")
    s.add_argument("--p", type=_floats, help="comma list of BSC crossover probabilities")
    s.add_argument("--rate", type=float, default=0.5)
    s.add_argument("--scale", default="exact", help="exact, fixed:c (BSC) or factor:s")
    _add_decoder_args(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--min-errors", type=int, default=200)
    s.add_argument("--max-frames", type=int, default=1_000_000)
    s.add_argument("--batch-size", type=int, default=64)
    s.add_argument("--workers", type=int, default=None, help="default from QUASILDPC_WORKERS, else 1")
    s.add_argument("--jsonl", action="store_true", help="JSON lines instead of CSV")
    s.add_argument("--out", help="results path (manifest goes to <out>.manifest.json)")
    s.add_argument("--manifest", help="explicit manifest path")

    t = sub.add_parser("trapset", help="trapping-set tools")
    tsub = t.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    c = tsub.add_parser("classify")
    _add_graph_args(c, required=False)
    c.add_argument("--embed44", action="store_true", help="use the built-in (4,4) embedding graph")
    c.add_argument("--vns", type=_ints, help="comma-separated 0-based VN indices")
    c.add_argument("--k", type=int, default=None, help="also report k-separation of each V1 node")
    e = tsub.add_parser("enumerate")
    _add_graph_args(e)
    e.add_argument("--a-max", type=int, default=4)
    e.add_argument("--b-max", type=int, default=4)
    e.add_argument("--budget", type=int, default=5_000_000)
    e.add_argument("--absolute-only", action="store_true")
    i = tsub.add_parser("inject")
    _add_graph_args(i, required=False)
    i.add_argument("--embed44", action="store_true")
    i.add_argument("--vns", type=_ints)
    i.add_argument("--policy", default="fixed:1", help="fixed:c or bsc:p")
    _add_decoder_args(i)
    gr = tsub.add_parser("growth")
    gr.add_argument("--dv", type=int, required=True)
    gr.add_argument("--dc", type=int, required=True)
    gr.add_argument("--t", type=int, default=8)
    gr.add_argument("--alg", default="ms", help="ms, ams, oms or spa")
    gr.add_argument("--L0", type=float, default=1.0)
    gr.add_argument("--Lmin", type=float, default=None)
    gr.add_argument("--Lmax", type=float, default=None)
    gr.add_argument("--levels", type=int, default=30)
    gr.add_argument("--alpha", type=float, default=0.75)
    gr.add_argument("--beta", type=float, default=0.5)
    gr.add_argument("--log-base", choices=("2", "e"), default="2")
    for p in (c, e, i, gr):
        p.add_argument("--out")
    return ap


# ------------------------------------------------------------------- helpers

def _graph(args):
    if getattr(args, "embed44", False):
        g, ts, seed = embed_four_four_set()
        return g, {"embed44": True, "embed_seed": seed}
    if args.alist:
        return read_alist(args.alist), {"alist": str(args.alist)}
    if args.code:
        parts = args.code.split(":")
        if len(parts) not in (3, 4):
            raise ValueError(f"--code: expected n:dv:dc[:seed], got {args.code!r}")
        n, dv, dc = (int(x) for x in parts[:3])
        seed = int(parts[3]) if len(parts) == 4 else 0
        return make_regular_code(n, dv, dc, seed), {"code": f"{n}:{dv}:{dc}:{seed}"}
    raise UsageError("one of --alist or --code is required")


def _decoder_config(args) -> DecoderConfig:
    quant = None if args.quant in ("none", "", None) else QuantizerSpec.parse(args.quant)
    return DecoderConfig(args.alg, alpha=args.alpha, beta=args.beta, max_iters=args.max_iters,
                         quantizer=quant, quantize_channel=not args.no_quant_channel,
                         stop_on_codeword=not args.no_stop)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- commands

def cmd_quantize(args) -> int:
    spec = QuantizerSpec(args.kind, args.delta, args.q, args.d, args.nu)
    rows = interval_table(spec)
    _emit(format_csv(rows) if args.csv else format_table(rows), args.out)
    return 0


def cmd_decode(args) -> int:
    g, src = _graph(args)
    try:
        llrs = np.loadtxt(args.llr, dtype=np.float64, ndmin=1)
    except ValueError as exc:
        raise ValueError(f"--llr: cannot parse {args.llr}: {exc}") from None
    cfg = _decoder_config(args)
    res = decode(g, llrs, cfg, backend=args.backend)
    out = {
        "bits": "".join(str(int(b)) for b in res.bits),
        "converged": res.converged,
        "iterations": res.iterations,
        "ties": res.ties,
        "peak_message_magnitude": res.peak,
        "decoder": cfg.describe(),
        "graph": src,
    }
    _emit(_dump(out), args.out)
    return 0


_SIM_KEYS = ("alist", "code", "channel", "ebn0", "p", "rate", "scale", "alg", "alpha", "beta", "max_iters",
             "quant", "no_quant_channel", "no_stop", "seed", "min_errors", "max_frames", "batch_size", "jsonl")


def _apply_config(args, parser_defaults: dict) -> None:
    """Fill arguments left at their defaults from the --config JSON file."""
    if not args.config:
        return
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"--config: {args.config} is not valid JSON ({exc})") from None
    params = data.get("params", data)
    unknown = sorted(set(params) - set(_SIM_KEYS) - {"workers", "backend"})
    if unknown:
        raise ValueError(f"--config: unknown field(s) {', '.join(unknown)}")
    for k, v in params.items():
        if getattr(args, k, None) == parser_defaults.get(k):
            setattr(args, k, v)


def cmd_simulate(args, parser_defaults: dict) -> int:
    _apply_config(args, parser_defaults)
    if not (args.alist or args.code):
        raise UsageError("simulate: one of --alist or --code is required")
    if args.alist and args.code:
        raise UsageError("simulate: --alist and --code are mutually exclusive")
    if args.channel is None:
        raise UsageError("simulate: --channel is required")
    points = args.ebn0 if args.channel == "awgn" else args.p
    if not points:
        flag = "--ebn0" if args.channel == "awgn" else "--p"
        raise UsageError(f"simulate: {flag} is required for the {args.channel} channel")
    g, src = _graph(args)
    cfg = SweepConfig(args.channel, tuple(points), _decoder_config(args), rate=args.rate,
                      scale=ScaleMode.parse(args.scale), master_seed=args.seed,
                      min_error_frames=args.min_errors, max_frames=args.max_frames, batch_size=args.batch_size)
    workers = args.workers if args.workers is not None else default_workers()
    records = list(run_sweep(cfg, g, workers=workers, backend=args.backend))
    text = records_to_jsonl(records) if args.jsonl else records_to_csv(records)
    _emit(text, args.out)

    params = {k: getattr(args, k) for k in _SIM_KEYS}
    manifest = {
        "command": "simulate",
        "params": params,
        "resolved": {"points": list(cfg.points), "decoder": cfg.decoder.describe(), "graph": src,
                     "n": g.n, "m": g.m},
        "config_file": args.config,
        "outputs": {"results": args.out},
        "version": __version__,
    }
    mpath = args.manifest or (f"{args.out}.manifest.json" if args.out else None)
    if mpath:
        Path(mpath).write_text(_dump(manifest), encoding="utf-8")
    else:
        sys.stderr.write(json.dumps(manifest, sort_keys=True) + "\n")
    return 0


def cmd_trapset(args) -> int:
    if args.mode == "growth":
        tr = idealized_growth(args.dv, args.dc, args.t, L0=args.L0, Lmin=args.Lmin, Lmax=args.Lmax,
                              algorithm=args.alg, levels=args.levels, alpha=args.alpha, beta=args.beta,
                              log_base=args.log_base)
        _emit(_dump(tr.to_dict()), args.out)
        return 0

    if args.mode == "enumerate":
        g, src = _graph(args)
        specs = enumerate_small(g, args.a_max, args.b_max, node_budget=args.budget)
        if args.absolute_only:
            specs = [s for s in specs if s.is_absolute]
        _emit(_dump({"graph": src, "count": len(specs), "sets": [s.to_dict() for s in specs]}), args.out)
        return 0

    if not (args.embed44 or args.alist or args.code):
        raise UsageError(f"trapset {args.mode}: one of --alist, --code or --embed44 is required")
    g, src = _graph(args)
    vns = args.vns if args.vns is not None else ([0, 1, 2, 3] if args.embed44 else None)
    if not vns:
        raise UsageError(f"trapset {args.mode}: --vns is required")
    spec = classify(g, vns)
    if args.mode == "classify":
        out = {"graph": src, "set": spec.to_dict()}
        if args.k is not None:
            out["k_separation"] = {str(v): k_separation(g, spec, v, args.k) for v in spec.v1}
        _emit(_dump(out), args.out)
        return 0

    rep = trapping_experiment(g, spec, _decoder_config(args), MagnitudePolicy.parse(args.policy),
                              backend=args.backend)
    _emit(_dump({"graph": src, "set": spec.to_dict(), "policy": args.policy, "report": rep.to_dict()}), args.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "quantize":
            return cmd_quantize(args)
        if args.command == "decode":
            return cmd_decode(args)
        if args.command == "simulate":
            sim = parser._subparsers._group_actions[0].choices["simulate"]
            return cmd_simulate(args, {a.dest: a.default for a in sim._actions})
        return cmd_trapset(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
