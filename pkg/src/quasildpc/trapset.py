"""Trapping-set classification, forced-error experiments and growth analysis.

An (a, b) trapping set is a connected set of ``a`` variable nodes whose
induced subgraph has ``b`` odd-degree check nodes. It is absolute when it
contains no stopping set, i.e. peeling along induced degree-one checks removes
every variable node.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .channel import EXACT, LlrFrame, ScaleMode, bsc_llr_magnitude
from .decoder import DecoderConfig, decode
from .tanner import TannerGraph, peg_fill


class EnumerationBudgetError(RuntimeError):
    """Raised when a search exceeds its node budget."""


@dataclass(frozen=True)
class TrappingSetSpec:
    vn_set: tuple[int, ...]
    cn_set: tuple[int, ...]
    induced_degrees: tuple[int, ...]
    c1: tuple[int, ...]
    v1: tuple[int, ...]
    odd_cns: tuple[int, ...]
    is_connected: bool
    contains_stopping_set: bool
    stopping_set: tuple[int, ...]

    @property
    def a(self) -> int:
        return len(self.vn_set)

    @property
    def b(self) -> int:
        return len(self.odd_cns)

    @property
    def is_trapping(self) -> bool:
        return self.is_connected and self.a > 0

    @property
    def is_absolute(self) -> bool:
        return self.is_trapping and not self.contains_stopping_set

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(a=self.a, b=self.b, is_trapping=self.is_trapping, is_absolute=self.is_absolute)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def classify(graph: TannerGraph, vn_set: Iterable[int]) -> TrappingSetSpec:
    """Induced-subgraph structure of a VN set.

    Disconnected sets are reported with ``is_connected=False`` and are not
    trapping sets.
    """
    vs = sorted(set(int(v) for v in vn_set))
    for v in vs:
        if not 0 <= v < graph.n:
            raise ValueError(f"VN index {v} out of range [0, {graph.n})")
    members = set(vs)
    deg: dict[int, int] = {}
    for v in vs:
        for c in graph.checks_of(v):
            deg[c] = deg.get(c, 0) + 1
    cns = sorted(deg)
    c1 = tuple(c for c in cns if deg[c] == 1)
    c1_set = set(c1)
    v1 = tuple(v for v in vs if any(c in c1_set for c in graph.checks_of(v)))
    odd = tuple(c for c in cns if deg[c] % 2)

    connected = True
    if vs:
        seen = {vs[0]}
        todo = deque([vs[0]])
        while todo:
            v = todo.popleft()
            for c in graph.checks_of(v):
                for u in graph.vars_of(c):
                    if u in members and u not in seen:
                        seen.add(u)
                        todo.append(u)
        connected = len(seen) == len(vs)

    return TrappingSetSpec(
        vn_set=tuple(vs), cn_set=tuple(cns), induced_degrees=tuple(deg[c] for c in cns),
        c1=c1, v1=v1, odd_cns=odd, is_connected=connected,
        contains_stopping_set=bool(_peel(graph, members)), stopping_set=tuple(sorted(_peel(graph, members))))


def _peel(graph: TannerGraph, members: set[int]) -> set[int]:
    """Largest stopping set inside ``members``: drop VNs on induced degree-one checks."""
    left = set(members)
    deg: dict[int, int] = {}
    for v in left:
        for c in graph.checks_of(v):
            deg[c] = deg.get(c, 0) + 1
    todo = deque(v for v in sorted(left) if any(deg[c] == 1 for c in graph.checks_of(v)))
    while todo:
        v = todo.popleft()
        if v not in left:
            continue
        left.discard(v)
        for c in graph.checks_of(v):
            deg[c] -= 1
            if deg[c] == 1:
                for u in graph.vars_of(c):
                    if u in left:
                        todo.append(u)
    return left


def _vn_neighbours(graph: TannerGraph) -> list[list[int]]:
    out = []
    for v in range(graph.n):
        s = set()
        for c in graph.checks_of(v):
            s.update(graph.vars_of(c))
        s.discard(v)
        out.append(sorted(s))
    return out


def enumerate_small(graph: TannerGraph, a_max: int, b_max: int, node_budget: int = 5_000_000) -> list[TrappingSetSpec]:
    """All connected VN sets with ``a <= a_max`` and ``b <= b_max``, classified.

    Connected sets are generated once each by the ESU extension scheme
    (extend only with VNs above the seed that are exclusive neighbours of the
    newest member). Results are sorted by (a, b, vn_set).
    """
    if a_max < 1:
        return []
    nbrs = _vn_neighbours(graph)
    found: list[tuple[int, ...]] = []
    budget = [node_budget]

    def odd_count(sub: Sequence[int]) -> int:
        deg: dict[int, int] = {}
        for v in sub:
            for c in graph.checks_of(v):
                deg[c] = deg.get(c, 0) + 1
        return sum(1 for x in deg.values() if x % 2)

    def extend(sub: list[int], near: set[int], ext: list[int], root: int) -> None:
        budget[0] -= 1
        if budget[0] < 0:
            raise EnumerationBudgetError(f"enumeration exceeded node budget {node_budget}")
        if odd_count(sub) <= b_max:
            found.append(tuple(sorted(sub)))
        if len(sub) == a_max:
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            fresh = [u for u in nbrs[w] if u > root and u not in near]
            sub.append(w)
            extend(sub, near | set(nbrs[w]) | {w}, ext + fresh, root)
            sub.pop()

    for v in range(graph.n):
        extend([v], set(nbrs[v]) | {v}, [u for u in nbrs[v] if u > v], v)

    specs = [classify(graph, s) for s in found]
    specs.sort(key=lambda t: (t.a, t.b, t.vn_set))
    return specs


# -------------------------------------------------------------------- forcing

@dataclass(frozen=True)
class MagnitudePolicy:
    """Channel LLR magnitude for forced-error frames: fixed ``c`` or exact BSC(p)."""

    kind: str = "fixed"
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fixed", "bsc"):
            raise ValueError(f"unknown magnitude policy {self.kind!r}")
        _ = self.magnitude

    @classmethod
    def fixed(cls, c: float) -> "MagnitudePolicy":
        return cls("fixed", float(c))

    @classmethod
    def bsc(cls, p: float) -> "MagnitudePolicy":
        return cls("bsc", float(p))

    @classmethod
    def parse(cls, text: str) -> "MagnitudePolicy":
        head, _, tail = text.partition(":")
        if head in ("fixed", "bsc") and tail:
            return cls(head, float(tail))
        raise ValueError(f"bad magnitude policy {text!r}; use fixed:c or bsc:p")

    @property
    def magnitude(self) -> float:
        if self.kind == "bsc":
            return bsc_llr_magnitude(self.value)
        if not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError(f"fixed magnitude must be positive, got {self.value}")
        return self.value

    def __str__(self) -> str:
        return f"{self.kind}:{self.value!r}"


def force_errors(frame: LlrFrame | int, ts: TrappingSetSpec | Iterable[int],
                 policy: MagnitudePolicy = MagnitudePolicy()) -> LlrFrame:
    """Frame with every VN of ``ts`` in error and every other VN correct.

    ``frame`` supplies the length (an int works too); all magnitudes come
    from ``policy``.
    """
    n = frame if isinstance(frame, (int, np.integer)) else frame.n
    vs = ts.vn_set if isinstance(ts, TrappingSetSpec) else tuple(ts)
    mag = policy.magnitude
    llrs = np.full(int(n), mag)
    if len(vs):
        llrs[list(vs)] = -mag
    if policy.kind == "bsc":
        return LlrFrame(llrs, "bsc", policy.value, EXACT)
    return LlrFrame(llrs, "bsc", math.nan, ScaleMode("fixed", mag))


# ----------------------------------------------------------------- separation

def separation_depths(graph: TannerGraph, ts: TrappingSetSpec, v: int, cap: int = 64) -> dict[int, int | None]:
    """For each degree-one check ``c`` of ``v``: first VN level of the
    computation tree below ``c`` that holds a trapping-set VN.

    Levels count VN generations below the root (``v`` is level 0, the other
    neighbours of ``c`` are level 1). ``None`` means no hit within ``cap``.
    The computation tree only forbids immediate backtracking, so the first hit
    is a shortest path over directed (VN, parent-CN) states.
    """
    if v not in ts.v1:
        raise ValueError(f"VN {v} is not adjacent to a degree-one check of the set")
    members = set(ts.vn_set)
    out: dict[int, int | None] = {}
    for c in ts.c1:
        if v not in graph.vars_of(c):
            continue
        hit = None
        seen = {(u, c) for u in graph.vars_of(c) if u != v}
        frontier = sorted(seen)
        level = 1
        while frontier and level <= cap:
            if any(u in members for u, _ in frontier):
                hit = level
                break
            nxt = []
            for u, parent in frontier:
                for c2 in graph.checks_of(u):
                    if c2 == parent:
                        continue
                    for w in graph.vars_of(c2):
                        if w != u and (w, c2) not in seen:
                            seen.add((w, c2))
                            nxt.append((w, c2))
            frontier = nxt
            level += 1
        out[c] = hit
    return out


def k_separation(graph: TannerGraph, ts: TrappingSetSpec, v: int, k: int) -> int:
    """Largest ``k' <= k`` such that ``v`` is k'-separated.

    ``v`` is j-separated when some degree-one check of ``v`` has no
    trapping-set VN among its descendants in the j-iteration tree.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    depths = separation_depths(graph, ts, v, cap=k + 1)
    best = 0
    for hit in depths.values():
        best = max(best, k if hit is None else min(hit - 1, k))
    return best


# ------------------------------------------------------------ growth analysis

def s_bar(dc: int, log_base: str = "2") -> float:
    """Correction bound ceil(log(dc - 1)) * ln 2 of a pairwise box-plus fold."""
    if dc < 2:
        raise ValueError("dc must be at least 2")
    if log_base not in ("2", "e"):
        raise ValueError(f"log_base must be '2' or 'e', got {log_base!r}")
    x = dc - 1
    depth = math.ceil(math.log2(x)) if log_base == "2" else math.ceil(math.log(x))
    return depth * math.log(2.0)


def _log_affine(l, b, const, start):
    """log of x_l where x_l = const + b x_{l-1}, x_0 = start; nan where x_l <= 0."""
    l = np.asarray(l, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if b == 1.0:
            return np.log(start + l * const)
        K = const / (1.0 - b)
        A = start - K
        if b > 1.0:
            inner = A + K * np.exp(-l * math.log(b))
            return np.where(inner > 0, l * math.log(b) + np.log(np.where(inner > 0, inner, 1.0)), np.nan)
        val = K + A * np.exp(l * math.log(b))
        return np.where(val > 0, np.log(np.where(val > 0, val, 1.0)), np.nan)


@dataclass
class GrowthLevel:
    l: int
    correct: float
    log_correct: float
    log_correct_bound: float
    log_incorrect_bound: float
    log_incorrect_linear: float


@dataclass
class GrowthTrace:
    params: dict
    records: list[GrowthLevel]
    crossing: int | None
    s_bar: float | None = None
    s_bar_alt: float | None = None
    l0_threshold: float | None = None
    l0_condition_met: bool | None = None
    base_valid: bool = True
    notes: list[str] = field(default_factory=list)

    @property
    def correct(self) -> list[float]:
        return [r.correct for r in self.records]

    def to_dict(self) -> dict:
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
            return x

        d = asdict(self)
        d["records"] = [{k: clean(v) for k, v in r.items()} for r in d["records"]]
        return {k: clean(v) if not isinstance(v, (list, dict)) else v for k, v in d.items()}


def idealized_growth(dv: int, dc: int, t: int, L0: float = 1.0, Lmin: float | None = None,
                     Lmax: float | None = None, algorithm: str = "ms", levels: int = 30,
                     alpha: float = 0.75, beta: float = 0.5, log_base: str = "2",
                     search_cap: int = 10_000_000) -> GrowthTrace:
    """Message-magnitude recursions on an idealized computation tree.

    Correct subtree (below a separated degree-one check), per level ``l``::

        ms   |L_l| = L + (dv-1) |L_{l-1}|
        ams  |L_l| = L + a(dv-1) |L_{l-1}|
        oms  |L_l| = L + (dv-1) (|L_{l-1}| - beta)
        spa  |L_l| = L + (dv-1) (|L_{l-1}| - s_bar)

    with ``L = L0`` (or ``Lmin`` on the AWGN channel). The incorrect messages
    inside a trapping set of super-node depth ``t`` are bounded by
    ``L'·B^r + Lbar (B^r - 1)/(B - 1)`` with ``B = b^t - 1``, ``r = ceil(l/t)``,
    ``L' = L0`` (or ``Lmax``) and ``Lbar = L' (1 + b + ... + b^(t-1))``.
    The crossing is the first level where ``|L_l| > (dv-1) |L'_l|``; it is
    searched up to ``search_cap`` levels in the log domain.
    """
    if dv < 3:
        raise ValueError("growth analysis needs dv >= 3 (bounds divide by dv - 2)")
    if t < 1 or levels < 1:
        raise ValueError("t and levels must be at least 1")
    alg = algorithm.lower()
    if alg.startswith("spa"):
        alg = "spa"
    if alg not in ("ms", "ams", "oms", "spa"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    awgn = Lmin is not None or Lmax is not None
    lo = float(Lmin if Lmin is not None else L0)
    hi = float(Lmax if Lmax is not None else L0)
    if not (lo > 0 and hi >= lo):
        raise ValueError("need 0 < Lmin <= Lmax")

    base = float(dv - 1)
    const = lo
    notes: list[str] = []
    sb = sb_alt = thr = None
    ok_l0 = None
    base_valid = True
    if alg == "ams":
        base = alpha * (dv - 1)
        base_valid = base > 1.0
        if not base_valid:
            notes.append("alpha*(dv-1) <= 1: correct messages do not grow")
    elif alg in ("oms", "spa"):
        if alg == "spa":
            sb = s_bar(dc, log_base)
            sb_alt = s_bar(dc, "e" if log_base == "2" else "2")
            shave = sb
        else:
            shave = beta
        const = lo - base * shave
        thr = (dv - 1) / (dv - 2) * shave
        ok_l0 = lo > thr

    grow = base ** t - 1.0
    lbar = hi * sum(base ** i for i in range(t))

    def incorrect(l):
        l = np.asarray(l, dtype=np.float64)
        r = np.ceil(l / t)
        with np.errstate(divide="ignore", invalid="ignore"):
            if grow <= 1.0:
                return np.log(hi * grow ** r + lbar * r)
            q = lbar / (grow - 1.0)
            return r * math.log(grow) + np.log(hi + q - q * np.exp(-r * math.log(grow)))

    def linear(l):
        l = np.asarray(l, dtype=np.float64)
        if grow <= 1.0:
            return np.full(l.shape, np.nan)
        return math.log(hi + lbar) + math.log(grow) + l / t * math.log(grow)

    ls = np.arange(levels + 1)
    logc = _log_affine(ls, base, const, lo)
    correct = [lo]
    for _ in range(levels):
        correct.append(const + base * correct[-1])
    if thr is None:
        # b^l L
        logb = ls * math.log(base) + math.log(lo) if base > 0 else np.full(ls.shape, np.nan)
    else:
        # b^l (L - thr) + thr with thr = b/(b-1) * shave
        logb = _log_affine(ls, base, thr * (1.0 - base), lo)
    records = [GrowthLevel(int(l), float(correct[l]), float(logc[l]), float(logb[l]),
                           float(incorrect(l)), float(linear(l))) for l in ls]

    crossing = None
    margin = math.log(dv - 1)
    chunk = 100_000
    start = 1
    while start <= search_cap and crossing is None:
        l = np.arange(start, min(start + chunk, search_cap + 1))
        with np.errstate(invalid="ignore"):
            hit = np.nonzero(_log_affine(l, base, const, lo) > margin + incorrect(l))[0]
        if hit.size:
            crossing = int(l[hit[0]])
        start += chunk
    if crossing is None:
        notes.append(f"no crossing within {search_cap} levels")

    params = dict(dv=dv, dc=dc, t=t, L0=float(L0), Lmin=lo, Lmax=hi, channel="awgn" if awgn else "bsc",
                  algorithm=alg, alpha=alpha if alg == "ams" else None,
                  beta=beta if alg == "oms" else None, log_base=log_base, Lbar_ch=lbar)
    return GrowthTrace(params, records, crossing, sb, sb_alt, thr, ok_l0, base_valid, notes)


# ----------------------------------------------------------------- experiments

@dataclass
class TrapReport:
    corrected: bool
    converged: bool
    iterations: int
    max_message_magnitude: float
    residual_errors: int
    config: dict

    def to_dict(self) -> dict:
        return asdict(self)


def trapping_experiment(graph: TannerGraph, ts: TrappingSetSpec | Iterable[int], config: DecoderConfig,
                        policy: MagnitudePolicy = MagnitudePolicy(), backend: str | None = None) -> TrapReport:
    """Force the set into error, decode, and report the outcome and peak |message|."""
    frame = force_errors(graph.n, ts, policy)
    res = decode(graph, frame.llrs, config, backend=backend)
    wrong = int(res.bits.sum())
    return TrapReport(res.converged and wrong == 0, res.converged, res.iterations, res.peak, wrong,
                      config.describe())


def embed_four_four_set(n: int = 504, dv: int = 3, dc: int = 6, seed: int = 0, tries: int = 200):
    """Regular graph containing a (4,4) absolute set shaped as an 8-cycle.

    Layout: VNs 0..3 (v1..v4) sit on checks 0..3 (c1..c4, degree one in the
    set) and on the 8-cycle checks 4..7. VN 4 (on c1) and VN 5 (on c2) share
    check 8, so v2 appears in the level-3 tree below c1. Growth completes the
    rest; seeds are tried from ``seed`` until v1 is 2- but not 3-separated.

    Returns ``(graph, spec, seed_used)``.
    """
    if dv != 3:
        raise ValueError("the 8-cycle layout needs dv = 3")
    m = n * dv // dc
    if n * dv % dc or m < 9 or n < 6:
        raise ValueError("infeasible size for the embedding")
    initial = [(0, 0), (1, 1), (2, 2), (3, 3)]
    cycle = [(0, 4), (1, 4), (1, 5), (2, 5), (2, 6), (3, 6), (3, 7), (0, 7)]
    bridge = [(4, 0), (4, 8), (5, 8), (5, 1)]
    initial += cycle + bridge
    last = None
    for s in range(seed, seed + tries):
        try:
            g = peg_fill(n, m, [dv] * n, [dc] * m, s, initial=initial)
        except Exception as exc:  # infeasible growth for this seed
            last = exc
            continue
        ts = classify(g, range(4))
        if (ts.a, ts.b) != (4, 4) or not ts.is_absolute or set(ts.c1) != {0, 1, 2, 3}:
            continue
        if k_separation(g, ts, 0, 3) == 2:
            return g, ts, s
    raise RuntimeError(f"no seed in [{seed}, {seed + tries}) gives the required separation") from last
