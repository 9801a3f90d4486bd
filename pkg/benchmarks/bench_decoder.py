"""Throughput of the numba kernels against the pure-numpy backend.

    python benchmarks/bench_decoder.py --frames 200 --ebn0 2.5

Both backends decode the same AWGN frames on a regular PEG code; the report
lists frames per second, iterations per second and the speedup, and checks
that min-sum decisions agree bit for bit.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from quasildpc import HAVE_NUMBA, DecoderConfig, QuantizerSpec, make_regular_code
from quasildpc.channel import awgn_frame, ebn0_to_sigma, frame_rng
from quasildpc.decoder import decode


def bench(graph, frames, config, backend):
    decode(graph, frames[0], config, backend=backend)  # warm-up / JIT
    t0 = time.perf_counter()
    bits, iters = [], 0
    for llr in frames:
        r = decode(graph, llr, config, backend=backend)
        bits.append(r.bits.copy())
        iters += r.iterations
    dt = time.perf_counter() - t0
    return dict(seconds=dt, frames_per_s=len(frames) / dt, iters_per_s=iters / dt, iterations=iters), bits


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--code", default="504:3:6:7", help="n:dv:dc:seed")
    ap.add_argument("--frames", type=int, default=200)
    ap.add_argument("--ebn0", type=float, default=2.5)
    ap.add_argument("--algs", default="ms,spa_boxplus")
    ap.add_argument("--quant", default="none")
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)

    n, dv, dc, seed = (int(x) for x in args.code.split(":"))
    g = make_regular_code(n, dv, dc, seed)
    sigma = ebn0_to_sigma(args.ebn0, 0.5)
    frames = [awgn_frame(n, sigma, rng=frame_rng(0, 0, f)).llrs for f in range(args.frames)]
    q = QuantizerSpec.parse(args.quant)
    rows = []
    for alg in args.algs.split(","):
        cfg = DecoderConfig(alg, quantizer=q, max_iters=200)
        npy, b_np = bench(g, frames, cfg, "numpy")
        row = dict(algorithm=cfg.algorithm, numpy=npy)
        if HAVE_NUMBA:
            nb, b_nb = bench(g, frames, cfg, "numba")
            row["numba"] = nb
            row["speedup"] = npy["seconds"] / nb["seconds"]
            row["decisions_equal"] = all(np.array_equal(a, b) for a, b in zip(b_np, b_nb))
        rows.append(row)

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"code {args.code}, {args.frames} AWGN frames at {args.ebn0} dB, quantizer {args.quant}")
    print(f"{'algorithm':<12} {'numpy fr/s':>11} {'numba fr/s':>11} {'speedup':>8}  decisions equal")
    for r in rows:
        nb = r.get("numba")
        print(f"{r['algorithm']:<12} {r['numpy']['frames_per_s']:>11.1f} "
              f"{(nb['frames_per_s'] if nb else float('nan')):>11.1f} {r.get('speedup', float('nan')):>8.1f}  "
              f"{r.get('decisions_equal', 'n/a')}")


if __name__ == "__main__":
    main()
