"""Deterministic Monte Carlo FER/BER estimation over operating points.

Every frame draws its noise from a Philox stream keyed by
(master_seed, point_index, frame_index). Frames are decoded in batches on a
thread pool, but results are reduced in frame order and the run stops at the
exact frame that brings the error count to ``min_error_frames``, so records
do not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .channel import ScaleMode, awgn_frame, bsc_frame, ebn0_to_sigma, frame_rng
from .decoder import DecoderConfig, decode, decode_batch
from .tanner import TannerGraph

WORKERS_ENV = "QUASILDPC_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            w = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        if w < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {w}")
        return w
    return 1


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: channel family, operating points and stopping rule.

    ``points`` are crossover probabilities for ``bsc`` and Eb/N0 values in dB
    for ``awgn`` (converted with ``rate``).
    """

    channel: str
    points: tuple[float, ...]
    decoder: DecoderConfig = DecoderConfig()
    rate: float = 0.5
    scale: ScaleMode = ScaleMode()
    master_seed: int = 0
    min_error_frames: int = 200
    max_frames: int = 1_000_000
    batch_size: int = 64

    def __post_init__(self):
        if self.channel not in ("bsc", "awgn"):
            raise ValueError(f"channel must be 'bsc' or 'awgn', got {self.channel!r}")
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        if not self.points:
            raise ValueError("point list must be nonempty")
        if self.min_error_frames < 1:
            raise ValueError("min_error_frames must be >= 1")
        if self.max_frames < 1 or self.batch_size < 1:
            raise ValueError("max_frames and batch_size must be >= 1")
        if not 0 < self.rate <= 1:
            raise ValueError(f"rate must lie in (0, 1], got {self.rate}")
        if self.channel == "awgn" and self.scale.kind == "fixed":
            raise ValueError("fixed-magnitude scaling only applies to the BSC")

    def noise_param(self, point: float) -> float:
        return ebn0_to_sigma(point, self.rate) if self.channel == "awgn" else point


@dataclass
class SimRecord:
    point_index: int
    point_param: float
    noise_param: float
    frames: int
    error_frames: int
    bit_errors: int
    undetected_errors: int
    fer: float
    ber: float
    fer_ci95: float
    ci_valid: bool
    upper_bound_only: bool
    mean_iters: float
    max_iters_seen: int
    seed: int
    wall_time: float = field(default=0.0, compare=False)

    CSV_FIELDS = ("point_param", "frames", "error_frames", "bit_errors", "fer", "ber",
                  "fer_ci95", "mean_iters", "max_iters_seen", "seed")

    def row(self) -> dict:
        return {k: getattr(self, k) for k in self.CSV_FIELDS}

    def to_dict(self, with_time: bool = False) -> dict:
        d = asdict(self)
        if not with_time:
            d.pop("wall_time")
        return d


def _frame_llrs(cfg: SweepConfig, graph: TannerGraph, point_index: int, noise: float, frame: int) -> np.ndarray:
    rng = frame_rng(cfg.master_seed, point_index, frame)
    if cfg.channel == "bsc":
        return bsc_frame(graph.n, noise, cfg.scale, rng).llrs
    return awgn_frame(graph.n, noise, cfg.scale, rng).llrs


def _run_batch(cfg: SweepConfig, graph: TannerGraph, point_index: int, noise: float, start: int, stop: int,
               backend: str | None):
    llrs = np.stack([_frame_llrs(cfg, graph, point_index, noise, f) for f in range(start, stop)])
    return decode_batch(graph, llrs, cfg.decoder, backend=backend)


def run_point(cfg: SweepConfig, graph: TannerGraph, point_index: int, workers: int | None = None,
              backend: str | None = None) -> SimRecord:
    """Simulate one operating point until ``min_error_frames`` errors or ``max_frames``.

    A frame is in error when the decoder output is not all-zero; this covers
    non-convergence and convergence to a wrong codeword (the latter is also
    counted in ``undetected_errors``).
    """
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    point = cfg.points[point_index]
    noise = cfg.noise_param(point)
    t0 = time.perf_counter()
    frames = errors = bit_errors = undetected = 0
    conv_iters = conv_frames = max_seen = 0
    bs = cfg.batch_size
    next_start = 0
    done = False

    def batches():
        nonlocal next_start
        while next_start < cfg.max_frames:
            s = next_start
            e = min(s + bs, cfg.max_frames)
            next_start = e
            yield s, e

    with ThreadPoolExecutor(max_workers=workers) as pool:
        gen = batches()
        pending = []
        for _ in range(workers + 1):
            nxt = next(gen, None)
            if nxt is None:
                break
            pending.append(pool.submit(_run_batch, cfg, graph, point_index, noise, *nxt, backend))
        while pending and not done:
            conv, iters, weight, _ = pending.pop(0).result()
            for f in range(conv.size):
                frames += 1
                w = int(weight[f])
                if conv[f]:
                    conv_frames += 1
                    conv_iters += int(iters[f])
                    max_seen = max(max_seen, int(iters[f]))
                if w or not conv[f]:
                    errors += 1
                    bit_errors += w
                    if conv[f]:
                        undetected += 1
                    if errors >= cfg.min_error_frames:
                        done = True
                        break
            if not done:
                nxt = next(gen, None)
                if nxt is not None:
                    pending.append(pool.submit(_run_batch, cfg, graph, point_index, noise, *nxt, backend))
        for fut in pending:
            fut.cancel()

    fer = errors / frames if frames else 0.0
    ber = bit_errors / (frames * graph.n) if frames else 0.0
    ci = 1.96 * math.sqrt(fer * (1.0 - fer) / frames) if frames else 0.0
    return SimRecord(
        point_index=point_index, point_param=point, noise_param=noise, frames=frames,
        error_frames=errors, bit_errors=bit_errors, undetected_errors=undetected, fer=fer, ber=ber,
        fer_ci95=ci, ci_valid=errors >= 20, upper_bound_only=errors == 0,
        mean_iters=conv_iters / conv_frames if conv_frames else 0.0, max_iters_seen=max_seen,
        seed=cfg.master_seed, wall_time=time.perf_counter() - t0)


def run_sweep(cfg: SweepConfig, graph: TannerGraph, workers: int | None = None, backend: str | None = None,
              on_record: Callable[[SimRecord], None] | None = None) -> Iterator[SimRecord]:
    """Yield one record per point, in point order."""
    for i in range(len(cfg.points)):
        rec = run_point(cfg, graph, i, workers=workers, backend=backend)
        if on_record is not None:
            on_record(rec)
        yield rec


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def records_to_csv(records: Sequence[SimRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SimRecord.CSV_FIELDS)
    for r in records:
        w.writerow([_fmt(v) for v in r.row().values()])
    return buf.getvalue()


def records_to_jsonl(records: Sequence[SimRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)


def message_magnitude_histogram(cfg: SweepConfig, graph: TannerGraph, point_index: int, bins,
                                frames: int = 100, backend: str | None = None):
    """Empirical pdf of |message| over all edges and iterations of ``frames`` frames.

    ``bins`` are bin edges (increasing, first edge 0); values beyond the last
    edge land in the last bin. Returns ``(edges, mass)`` with ``mass`` summing
    to 1, and the largest magnitude seen.
    """
    edges = np.asarray(bins, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bins must be at least two increasing edges")
    counts = np.zeros(edges.size - 1, dtype=np.int64)
    noise = cfg.noise_param(cfg.points[point_index])
    peak = 0.0
    for f in range(frames):
        llrs = _frame_llrs(cfg, graph, point_index, noise, f)
        res = decode(graph, llrs, cfg.decoder, backend=backend, hist=(edges, counts))
        peak = max(peak, res.peak)
    total = counts.sum()
    mass = counts / total if total else counts.astype(np.float64)
    return edges, mass, peak
