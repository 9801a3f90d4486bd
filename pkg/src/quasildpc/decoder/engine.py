"""Decoder configuration, per-operation update rules and the flooding decoder."""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np

from .._accel import resolve_backend
from ..quantizer import QuantizerSpec
from ..tanner import TannerGraph
from . import kernels as K
from . import numpy_backend as NB

ALGORITHMS = {
    "ms": K.MS,
    "ams": K.AMS,
    "oms": K.OMS,
    "spa_tanh": K.SPA_TANH,
    "spa_phi": K.SPA_PHI,
    "spa_boxplus": K.SPA_BOXPLUS,
    "spa_approx": K.SPA_APPROX,
}
_ALIASES = {"spa": "spa_boxplus", "approx": "spa_approx", "min_sum": "ms", "minsum": "ms"}

# unquantized saturation ceiling: finite, with headroom so VN sums of a few
# ceilings stay finite
FLOAT_CEILING = 1e300


def canonical_algorithm(name: str) -> str:
    key = str(name).lower().replace("-", "_")
    key = _ALIASES.get(key, key)
    if key not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; expected one of {sorted(ALGORITHMS)}")
    return key


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder settings.

    Parameters
    ----------
    algorithm : str
        ``ms``, ``ams``, ``oms``, ``spa_tanh``, ``spa_phi``, ``spa_boxplus`` or
        ``spa_approx`` (``spa`` is an alias for ``spa_boxplus``).
    alpha, beta : float
        Attenuation (AMS, ``0 < alpha < 1``) and offset (OMS, ``beta > 0``).
    quantizer : QuantizerSpec, optional
        Attached to the channel input and to every VN and CN output, each
        toggleable.
    """

    algorithm: str = "ms"
    alpha: float = 0.75
    beta: float = 0.5
    max_iters: int = 200
    quantizer: QuantizerSpec | None = None
    quantize_channel: bool = True
    quantize_vn: bool = True
    quantize_cn: bool = True
    stop_on_codeword: bool = True

    def __post_init__(self):
        object.__setattr__(self, "algorithm", canonical_algorithm(self.algorithm))
        if self.algorithm == "ams" and not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1) for AMS, got {self.alpha}")
        if self.algorithm == "oms" and not self.beta > 0.0:
            raise ValueError(f"beta must be positive for OMS, got {self.beta}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be an integer >= 1, got {self.max_iters}")
        object.__setattr__(self, "max_iters", int(self.max_iters))
        if self.quantizer is not None and not self.quantizer.enabled:
            object.__setattr__(self, "quantizer", None)

    @property
    def code(self) -> int:
        return ALGORITHMS[self.algorithm]

    @property
    def ceiling(self) -> float:
        return self.quantizer.max_level if self.quantizer is not None else FLOAT_CEILING

    def describe(self) -> dict:
        q = self.quantizer
        return {
            "algorithm": self.algorithm,
            "alpha": self.alpha,
            "beta": self.beta,
            "max_iters": self.max_iters,
            "quantizer": q.to_string() if q is not None else "none",
            "quantize_channel": self.quantize_channel,
            "quantize_vn": self.quantize_vn,
            "quantize_cn": self.quantize_cn,
            "stop_on_codeword": self.stop_on_codeword,
        }


@dataclass
class MessageState:
    """Per-edge messages, indexed by edge id."""

    vn_to_cn: np.ndarray
    cn_to_vn: np.ndarray

    @classmethod
    def initial(cls, graph: TannerGraph, llrs) -> "MessageState":
        lch = np.asarray(llrs, dtype=np.float64)
        if lch.shape != (graph.n,):
            raise ValueError(f"expected {graph.n} channel LLRs, got shape {lch.shape}")
        return cls(lch[graph.edge_vn].copy(), np.zeros(graph.num_edges))


@dataclass
class DecodeResult:
    bits: np.ndarray
    converged: bool
    iterations: int
    totals: np.ndarray
    ties: int = 0
    peak: float = 0.0
    trace: np.ndarray | None = field(default=None, repr=False)
    state: MessageState | None = field(default=None, repr=False)


def _qarrays(spec: QuantizerSpec | None):
    if spec is None:
        return np.zeros(0), np.zeros(1), np.zeros(0, dtype=np.bool_)
    return (np.ascontiguousarray(spec.thresholds), np.ascontiguousarray(spec.levels),
            np.ascontiguousarray(spec.closed))


class PreparedGraph:
    """Contiguous arrays and the numpy slot layout for one graph."""

    def __init__(self, g: TannerGraph):
        self.graph = weakref.proxy(g)
        self.vn_ptr = np.ascontiguousarray(g.vn_ptr, dtype=np.int64)
        self.cn_ptr = np.ascontiguousarray(g.cn_ptr, dtype=np.int64)
        self.cn_edges = np.ascontiguousarray(g.cn_edges, dtype=np.int64)
        self.edge_vn = np.ascontiguousarray(g.edge_vn, dtype=np.int64)
        self.max_dc = max(g.max_cn_degree, 1)
        self._layout = None

    @property
    def layout(self) -> NB.SlotLayout:
        if self._layout is None:
            self._layout = NB.SlotLayout(self.graph)
        return self._layout


_PREPARED: "weakref.WeakKeyDictionary[TannerGraph, PreparedGraph]" = weakref.WeakKeyDictionary()


def prepare(g: TannerGraph) -> PreparedGraph:
    p = _PREPARED.get(g)
    if p is None:
        p = _PREPARED[g] = PreparedGraph(g)
    return p


def _hist_arrays(hist):
    if hist is None:
        return np.zeros(1), np.zeros(0, dtype=np.int64)
    edges, counts = hist
    return np.ascontiguousarray(edges, dtype=np.float64), counts


def decode(graph: TannerGraph, llrs, config: DecoderConfig = DecoderConfig(), backend: str | None = None,
           record_trace: bool = False, hist=None, keep_state: bool = False) -> DecodeResult:
    """Flooding decode of one frame.

    ``hist`` is an optional ``(bin_edges, counts)`` pair; ``counts`` (int64)
    is incremented in place with the magnitude of every message passed.
    """
    backend = resolve_backend(backend)
    llr = np.ascontiguousarray(llrs, dtype=np.float64)
    if llr.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} channel LLRs, got shape {llr.shape}")
    if not np.all(np.isfinite(llr)):
        raise ValueError("channel LLRs must be finite")
    p = prepare(graph)
    q = config.quantizer
    thr, lvl, closed = _qarrays(q)
    qon = q is not None
    v2c = np.empty(graph.num_edges)
    c2v = np.zeros(graph.num_edges)
    totals = np.zeros(graph.n)
    bits = np.zeros(graph.n, dtype=np.uint8)
    trace = np.zeros((config.max_iters if record_trace else 0, graph.n), dtype=np.uint8)
    if backend == "numba":
        he, hc = _hist_arrays(hist)
        conv, it, ties, peak = K.decode_frame(
            llr, p.vn_ptr, p.cn_ptr, p.cn_edges, p.edge_vn, config.code, float(config.alpha),
            float(config.beta), config.ceiling, config.max_iters, config.stop_on_codeword,
            thr, lvl, closed, qon and config.quantize_channel, qon and config.quantize_vn,
            qon and config.quantize_cn, v2c, c2v, totals, bits, trace, he, hc)
    else:
        conv, it, ties, peak = NB.decode_frame(
            p.layout, llr, config.code, float(config.alpha), float(config.beta), config.ceiling,
            config.max_iters, config.stop_on_codeword, (thr, lvl, closed) if qon else None,
            config.quantize_channel, config.quantize_vn, config.quantize_cn,
            v2c, c2v, totals, bits, trace if record_trace else None, hist)
    return DecodeResult(
        bits=bits, converged=bool(conv), iterations=int(it), totals=totals, ties=int(ties),
        peak=float(peak), trace=trace[:it] if record_trace else None,
        state=MessageState(v2c, c2v) if keep_state else None)


def decode_batch(graph: TannerGraph, llrs, config: DecoderConfig, backend: str | None = None, hist=None):
    """Decode rows of ``llrs``; returns (converged, iterations, weight, peak) arrays."""
    backend = resolve_backend(backend)
    llrs = np.ascontiguousarray(llrs, dtype=np.float64)
    if llrs.ndim != 2 or llrs.shape[1] != graph.n:
        raise ValueError(f"expected an (frames, {graph.n}) LLR array, got {llrs.shape}")
    p = prepare(graph)
    q = config.quantizer
    thr, lvl, closed = _qarrays(q)
    qon = q is not None
    if backend == "numba":
        he, hc = _hist_arrays(hist)
        return K.decode_many(
            llrs, p.vn_ptr, p.cn_ptr, p.cn_edges, p.edge_vn, config.code, float(config.alpha),
            float(config.beta), config.ceiling, config.max_iters, config.stop_on_codeword,
            thr, lvl, closed, qon and config.quantize_channel, qon and config.quantize_vn,
            qon and config.quantize_cn, he, hc)
    nf = llrs.shape[0]
    conv = np.zeros(nf, dtype=np.bool_)
    iters = np.zeros(nf, dtype=np.int64)
    weight = np.zeros(nf, dtype=np.int64)
    peaks = np.zeros(nf)
    v2c = np.empty(graph.num_edges)
    c2v = np.zeros(graph.num_edges)
    totals = np.zeros(graph.n)
    bits = np.zeros(graph.n, dtype=np.uint8)
    for f in range(nf):
        c, it, _, pk = NB.decode_frame(
            p.layout, llrs[f], config.code, float(config.alpha), float(config.beta), config.ceiling,
            config.max_iters, config.stop_on_codeword, (thr, lvl, closed) if qon else None,
            config.quantize_channel, config.quantize_vn, config.quantize_cn,
            v2c, c2v, totals, bits, None, hist)
        conv[f], iters[f], weight[f], peaks[f] = c, it, int(bits.sum()), pk
    return conv, iters, weight, peaks


# ---------------------------------------------------------------- single updates

def vn_update(state: MessageState, graph: TannerGraph, llrs, quantizer: QuantizerSpec | None = None,
              backend: str | None = None) -> np.ndarray:
    """Update ``state.vn_to_cn`` in place from ``state.cn_to_vn``; return per-VN totals."""
    lch = np.ascontiguousarray(llrs, dtype=np.float64)
    if lch.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} channel LLRs, got shape {lch.shape}")
    totals = np.zeros(graph.n)
    p = prepare(graph)
    if resolve_backend(backend) == "numba":
        thr, lvl, closed = _qarrays(quantizer)
        K.vn_pass(lch, p.vn_ptr, state.cn_to_vn, state.vn_to_cn, totals, thr, lvl, closed,
                  quantizer is not None and quantizer.enabled)
    else:
        q = _qarrays(quantizer) if quantizer is not None and quantizer.enabled else None
        NB.vn_pass(p.layout, lch, state.cn_to_vn, state.vn_to_cn, totals, q)
    return totals


def _cn_update(alg, state, graph, alpha=1.0, beta=0.0, quantizer=None, backend=None):
    p = prepare(graph)
    qon = quantizer is not None and quantizer.enabled
    ceiling = quantizer.max_level if qon else FLOAT_CEILING
    thr, lvl, closed = _qarrays(quantizer if qon else None)
    if resolve_backend(backend) == "numba":
        s = [np.empty(p.max_dc) for _ in range(4)]
        K.cn_pass(alg, float(alpha), float(beta), ceiling, p.cn_ptr, p.cn_edges, state.vn_to_cn,
                  state.cn_to_vn, thr, lvl, closed, qon, *s)
    else:
        NB.cn_pass(p.layout, alg, float(alpha), float(beta), ceiling, state.vn_to_cn, state.cn_to_vn,
                   (thr, lvl, closed) if qon else None)
    return state.cn_to_vn


def cn_update_ms(state, graph, quantizer=None, backend=None):
    """Min-sum check update: extrinsic sign product times extrinsic minimum."""
    return _cn_update(K.MS, state, graph, quantizer=quantizer, backend=backend)


def cn_update_ams(state, graph, alpha, quantizer=None, backend=None):
    """Attenuated min-sum; ``alpha = 1`` reproduces min-sum."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return _cn_update(K.AMS, state, graph, alpha=alpha, quantizer=quantizer, backend=backend)


def cn_update_oms(state, graph, beta, quantizer=None, backend=None):
    """Offset min-sum; ``beta = 0`` reproduces min-sum."""
    if not beta >= 0.0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    return _cn_update(K.OMS, state, graph, beta=beta, quantizer=quantizer, backend=backend)


def cn_update_spa_tanh(state, graph, quantizer=None, backend=None):
    return _cn_update(K.SPA_TANH, state, graph, quantizer=quantizer, backend=backend)


def cn_update_spa_phi(state, graph, quantizer=None, backend=None):
    return _cn_update(K.SPA_PHI, state, graph, quantizer=quantizer, backend=backend)


def cn_update_spa_boxplus(state, graph, quantizer=None, backend=None):
    return _cn_update(K.SPA_BOXPLUS, state, graph, quantizer=quantizer, backend=backend)


def cn_update_spa_approx(state, graph, quantizer=None, backend=None):
    return _cn_update(K.SPA_APPROX, state, graph, quantizer=quantizer, backend=backend)


_SINGLE: dict[int, TannerGraph] = {}


def check_node(values, algorithm: str = "ms", alpha: float = 1.0, beta: float = 0.0,
               backend: str | None = None) -> np.ndarray:
    """Outputs of one check node whose incoming messages are ``values``.

    >>> check_node([2.0, -3.0, 1.5], "ms")
    array([-1.5,  1.5, -2. ])
    """
    x = np.asarray(values, dtype=np.float64)
    d = x.size
    if d == 0:
        raise ValueError("a check node needs at least one input")
    g = _SINGLE.get(d)
    if g is None:
        g = _SINGLE[d] = TannerGraph(d, 1, [[0]] * d)
    state = MessageState(x.copy(), np.zeros(d))
    alg = ALGORITHMS[canonical_algorithm(algorithm)]
    return _cn_update(alg, state, g, alpha=alpha, beta=beta, backend=backend).copy()


# ---------------------------------------------------------------- scalar rules

def _pair(x, y):
    return np.ndim(x) or np.ndim(y)


def boxplus(x, y):
    """ln((1 + e^(x+y)) / (e^x + e^y)), evaluated stably (vectorized over arrays)."""
    if _pair(x, y):
        return NB._boxplus(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    return float(K.boxplus(float(x), float(y)))


def boxplus_approx(x, y):
    if _pair(x, y):
        return NB._boxplus(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64), approx=True)
    return float(K.boxplus_approx(float(x), float(y)))


def correction(x, y):
    """s(x, y) = ln(1 + e^-|x+y|) - ln(1 + e^-|x-y|) (vectorized over arrays)."""
    if _pair(x, y):
        return NB._correction(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    return float(K.correction(float(x), float(y)))


def correction_approx(x, y):
    if _pair(x, y):
        return NB._correction(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64), approx=True)
    return float(K.correction_approx(float(x), float(y)))


def approx_log1p_exp(z: float) -> float:
    """Two-piece linear stand-in for ln(1 + e^-|z|)."""
    return float(K.log1p_exp_neg_approx(float(z)))


def phi(x):
    """phi(x) = -ln tanh(x/2) (numerically stable form, vectorized)."""
    return NB._phi(np.asarray(x, dtype=np.float64)) if np.ndim(x) else float(K.phi(float(x)))


def phi_naive(x):
    """-ln(tanh(x/2)) evaluated literally; rounds to 0 once tanh(x/2) rounds to 1."""
    with np.errstate(divide="ignore"):
        return -np.log(np.tanh(np.asarray(x, dtype=np.float64) / 2.0))


def spa_tanh_naive(values) -> np.ndarray:
    """Literal 2 atanh(prod tanh(x/2)) check update over one node's inputs.

    Overflows to +-inf when the product of tanh values rounds to 1.
    """
    x = np.asarray(values, dtype=np.float64)
    t = np.tanh(x / 2.0)
    out = np.empty_like(x)
    with np.errstate(divide="ignore"):
        for k in range(x.size):
            out[k] = 2.0 * np.arctanh(np.prod(np.delete(t, k)))
    return out


def phi_saturation_point() -> float:
    """Smallest double x with ``phi_naive(x) == 0`` (bisection over float bit patterns)."""
    lo, hi = np.float64(1.0), np.float64(1000.0)
    assert phi_naive(lo) > 0 and phi_naive(hi) == 0
    a = int(lo.view(np.int64))
    b = int(hi.view(np.int64))
    while b - a > 1:
        mid = (a + b) // 2
        if phi_naive(np.int64(mid).view(np.float64)) == 0:
            b = mid
        else:
            a = mid
    return float(np.int64(b).view(np.float64))

