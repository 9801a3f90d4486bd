"""Vectorized numpy decoder, used when numba is unavailable or disabled.

Nodes are laid out as padded slot matrices and every reduction runs slot by
slot in the same order as the loop kernels, so min-sum results are bitwise
identical across backends. Sum-product rules call numpy's transcendental
functions, which may differ from libm in the last ulp.
"""

from __future__ import annotations

import numpy as np

from ..tanner import TannerGraph
from . import kernels as K


class SlotLayout:
    """Padded (node, slot) -> edge id tables for one graph."""

    def __init__(self, g: TannerGraph):
        self.n, self.m = g.n, g.m
        self.vn_slots = _slots(g.vn_ptr, np.arange(g.num_edges))
        self.cn_slots = _slots(g.cn_ptr, g.cn_edges)
        self.vn_mask = self.vn_slots >= 0
        self.cn_mask = self.cn_slots >= 0
        self.cn_deg = g.cn_degrees
        self.edge_vn = g.edge_vn
        self.edge_cn = g.edge_cn
        self.num_edges = g.num_edges


def _slots(ptr: np.ndarray, flat: np.ndarray) -> np.ndarray:
    deg = np.diff(ptr)
    width = max(int(deg.max()) if deg.size else 0, 1)
    out = np.full((deg.size, width), -1, dtype=np.int64)
    col = np.arange(flat.size) - np.repeat(ptr[:-1], deg)
    out[np.repeat(np.arange(deg.size), deg), col] = flat
    return out


def quantize_array(x, thr, lvl, closed):
    a = np.abs(x)
    k = np.searchsorted(thr, a, side="right")
    if thr.size:
        at = np.clip(k - 1, 0, thr.size - 1)
        k = k - ((k > 0) & (thr[at] == a) & closed[at])
    v = lvl[k]
    return np.where((x < 0) & (v > 0), -v, v)


def _gather(values, slots, pad):
    out = np.where(slots >= 0, values[np.maximum(slots, 0)], pad)
    return out


def _scatter(dest, slots, mask, values):
    dest[slots[mask]] = values[mask]


def _boxplus(x, y, approx=False):
    ax, ay = np.abs(x), np.abs(y)
    sgn = np.where((x < 0) != (y < 0), -1.0, 1.0)
    lo = np.minimum(ax, ay)
    hi = np.maximum(ax, ay)
    with np.errstate(invalid="ignore", over="ignore"):
        if approx:
            f = lambda z: np.where(np.abs(z) < 2.5, 0.6 - 0.24 * np.abs(z), 0.0)
            body = sgn * lo + (f(x + y) - f(x - y))
        else:
            g = lambda z: np.log1p(np.exp(-np.abs(z)))
            big = sgn * lo + (g(x + y) - g(x - y))
            small = sgn * np.log1p(np.expm1(lo) * -np.expm1(-hi) / (1.0 + np.exp(lo - hi)))
            body = np.where(lo < K._SMALL, small, big)
    return np.where(np.isinf(hi), sgn * lo, body)


def _correction(x, y, approx=False):
    with np.errstate(over="ignore"):
        if approx:
            f = lambda z: np.where(np.abs(z) < 2.5, 0.6 - 0.24 * np.abs(z), 0.0)
        else:
            f = lambda z: np.log1p(np.exp(-np.abs(z)))
        return f(x + y) - f(x - y)


def _phi(x):
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(x <= 0, np.inf, np.log1p(2.0 / np.expm1(x)))


def cn_pass(layout: SlotLayout, alg, alpha, beta, ceiling, v2c, c2v, q=None):
    slots, mask = layout.cn_slots, layout.cn_mask
    width = slots.shape[1]
    X = _gather(v2c, slots, np.inf)
    negs = X < 0
    parity = np.logical_xor.reduce(negs, axis=1)[:, None]
    sign_neg = parity != negs

    if alg <= K.OMS:
        A = np.abs(X)
        idx = np.argmin(A, axis=1)
        rows = np.arange(A.shape[0])
        min1 = A[rows, idx]
        B = A.copy()
        B[rows, idx] = np.inf
        min2 = B.min(axis=1)
        mag = np.where(np.arange(width)[None, :] == idx[:, None], min2[:, None], min1[:, None])
        if alg == K.AMS:
            mag = alpha * mag
        elif alg == K.OMS:
            mag = np.maximum(mag - beta, 0.0)
        out = np.where(sign_neg & (mag > 0), -mag, mag)
        out = np.where(np.isinf(mag), ceiling, out)
    elif alg in (K.SPA_BOXPLUS, K.SPA_APPROX):
        approx = alg == K.SPA_APPROX
        F = np.empty_like(X)
        Bk = np.empty_like(X)
        F[:, 0] = X[:, 0]
        for k in range(1, width):
            F[:, k] = _boxplus(F[:, k - 1], X[:, k], approx)
        Bk[:, -1] = X[:, -1]
        for k in range(width - 2, -1, -1):
            Bk[:, k] = _boxplus(X[:, k], Bk[:, k + 1], approx)
        ident = np.full(X.shape[0], np.inf)
        out = np.empty_like(X)
        for k in range(width):
            left = F[:, k - 1] if k > 0 else ident
            right = Bk[:, k + 1] if k < width - 1 else ident
            if k == 0:
                out[:, k] = right
            elif k == width - 1:
                out[:, k] = left
            else:
                out[:, k] = np.where(np.isinf(left), right, np.where(np.isinf(right), left, _boxplus(left, right, approx)))
        out = np.clip(out, -ceiling, ceiling) + 0.0
    elif alg == K.SPA_PHI:
        Pv = np.where(mask, _phi(np.abs(X)), 0.0)
        F = np.cumsum(Pv, axis=1)
        Bk = np.cumsum(Pv[:, ::-1], axis=1)[:, ::-1]
        tot = np.empty_like(X)
        for k in range(width):
            if k == 0:
                tot[:, k] = Bk[:, 1] if width > 1 else 0.0
            elif k == width - 1:
                tot[:, k] = F[:, k - 1]
            else:
                tot[:, k] = F[:, k - 1] + Bk[:, k + 1]
        mag = np.minimum(_phi(tot), ceiling)
        out = np.where(sign_neg & (mag > 0), -mag, mag)
    else:
        A = np.abs(X)
        e = np.exp(-A)
        T = np.where(mask, np.tanh(0.5 * A), 1.0)
        U = np.where(mask, 2.0 * e / (1.0 + e), 0.0)
        FP = np.empty_like(X)
        FC = np.empty_like(X)
        BP = np.empty_like(X)
        BC = np.empty_like(X)
        FP[:, 0], FC[:, 0] = T[:, 0], U[:, 0]
        for k in range(1, width):
            FC[:, k] = FC[:, k - 1] + U[:, k] * FP[:, k - 1]
            FP[:, k] = FP[:, k - 1] * T[:, k]
        BP[:, -1], BC[:, -1] = T[:, -1], U[:, -1]
        for k in range(width - 2, -1, -1):
            BC[:, k] = BC[:, k + 1] + U[:, k] * BP[:, k + 1]
            BP[:, k] = BP[:, k + 1] * T[:, k]
        P = np.empty_like(X)
        C = np.empty_like(X)
        for k in range(width):
            if k == 0:
                P[:, k] = BP[:, 1] if width > 1 else 1.0
                C[:, k] = BC[:, 1] if width > 1 else 0.0
            elif k == width - 1:
                P[:, k], C[:, k] = FP[:, k - 1], FC[:, k - 1]
            else:
                P[:, k] = FP[:, k - 1] * BP[:, k + 1]
                C[:, k] = FC[:, k - 1] + BC[:, k + 1] * FP[:, k - 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            mag = np.where(C > 0, np.minimum(np.log1p(2.0 * P / np.where(C > 0, C, 1.0)), ceiling), ceiling)
        out = np.where(sign_neg & (mag > 0), -mag, mag)

    if alg > K.OMS:
        out = np.where(layout.cn_deg[:, None] == 1, ceiling, out)
    if q is not None:
        out = quantize_array(out, *q)
    _scatter(c2v, slots, mask, out)


def vn_pass(layout: SlotLayout, lch, c2v, v2c, totals, q=None):
    slots, mask = layout.vn_slots, layout.vn_mask
    M = _gather(c2v, slots, 0.0)
    s = lch.copy()
    for k in range(M.shape[1]):
        s = s + M[:, k]
    totals[:] = s
    out = np.empty_like(M)
    for k in range(M.shape[1]):
        t = lch.copy()
        for f in range(M.shape[1]):
            if f != k:
                t = t + M[:, f]
        out[:, k] = t
    if q is not None:
        out = quantize_array(out, *q)
    _scatter(v2c, slots, mask, out)


def decode_frame(layout: SlotLayout, llr, alg, alpha, beta, ceiling, max_iters, stop,
                 q, qch, qvn, qcn, v2c, c2v, totals, bits, trace=None, hist=None):
    """Numpy twin of :func:`kernels.decode_frame`; same return tuple."""
    lch = quantize_array(llr, *q) if (q is not None and qch) else np.asarray(llr, dtype=np.float64).copy()
    v2c[:] = lch[layout.edge_vn]
    peak = float(np.abs(v2c).max(initial=0.0))
    if hist is not None:
        _hist_add(hist, v2c)
    converged = False
    it = 0
    ties = 0
    while it < max_iters:
        cn_pass(layout, alg, alpha, beta, ceiling, v2c, c2v, q if qcn else None)
        vn_pass(layout, lch, c2v, v2c, totals, q if qvn else None)
        it += 1
        peak = max(peak, float(np.abs(c2v).max(initial=0.0)), float(np.abs(v2c).max(initial=0.0)))
        if hist is not None:
            _hist_add(hist, c2v)
            _hist_add(hist, v2c)
        bits[:] = totals < 0
        ties = int(np.count_nonzero(totals == 0))
        if trace is not None:
            trace[it - 1] = bits
        par = np.zeros(layout.m, dtype=np.int64)
        np.add.at(par, layout.edge_cn, bits[layout.edge_vn])
        converged = not np.any(par & 1)
        if converged and stop:
            break
    return converged, it, ties, peak


def _hist_add(hist, values):
    edges, counts = hist
    k = np.searchsorted(edges, np.abs(values), side="right") - 1
    k = np.clip(k, 0, counts.size - 1)
    counts += np.bincount(k, minlength=counts.size)
