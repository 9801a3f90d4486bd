"""Loop kernels for flooding message passing (numba-compiled when available).

Everything here works on the edge-indexed arrays of
:class:`~quasildpc.tanner.TannerGraph`; edges are VN-major, so the edges of VN
``i`` are ``vn_ptr[i]:vn_ptr[i+1]``. Check-node visiting order is ``cn_edges``.
"""

from __future__ import annotations

import math

import numpy as np

from .._accel import njit

MS, AMS, OMS, SPA_TANH, SPA_PHI, SPA_BOXPLUS, SPA_APPROX = range(7)

# below this magnitude the min+correction form of box-plus loses relative
# accuracy; switch to the factored identity
_SMALL = 1.0


@njit(cache=True)
def log1p_exp_neg(z):
    """ln(1 + e^-|z|)."""
    return math.log1p(math.exp(-abs(z)))


@njit(cache=True)
def log1p_exp_neg_approx(z):
    """Two-piece linear stand-in for ln(1 + e^-|z|)."""
    a = abs(z)
    if a < 2.5:
        return 0.6 - 0.24 * a
    return 0.0


@njit(cache=True)
def correction(x, y):
    """Box-plus correction term s(x, y); bounded by ln 2 in magnitude."""
    return log1p_exp_neg(x + y) - log1p_exp_neg(x - y)


@njit(cache=True)
def correction_approx(x, y):
    return log1p_exp_neg_approx(x + y) - log1p_exp_neg_approx(x - y)


@njit(cache=True)
def boxplus(x, y):
    """x [+] y = ln((1 + e^(x+y)) / (e^x + e^y)), evaluated without overflow."""
    ax = abs(x)
    ay = abs(y)
    sgn = -1.0 if (x < 0.0) != (y < 0.0) else 1.0
    lo = min(ax, ay)
    hi = max(ax, ay)
    if math.isinf(hi):
        return sgn * lo
    if lo < _SMALL:
        # ln(1 + (e^lo - 1)(1 - e^-hi) / (1 + e^(lo-hi)))
        num = math.expm1(lo) * -math.expm1(-hi)
        return sgn * math.log1p(num / (1.0 + math.exp(lo - hi)))
    return sgn * lo + correction(x, y)


@njit(cache=True)
def boxplus_approx(x, y):
    ax = abs(x)
    ay = abs(y)
    sgn = -1.0 if (x < 0.0) != (y < 0.0) else 1.0
    lo = min(ax, ay)
    if math.isinf(max(ax, ay)):
        return sgn * lo
    return sgn * lo + correction_approx(x, y)


@njit(cache=True)
def phi(x):
    """phi(x) = -ln tanh(x/2) for x >= 0, written as log1p(2/expm1(x))."""
    if x <= 0.0:
        return math.inf
    return math.log1p(2.0 / math.expm1(x))


@njit(cache=True)
def tanh_pair(a):
    """(tanh(a/2), 1 - tanh(a/2)) for a >= 0, both to full relative precision."""
    e = math.exp(-a)
    return math.tanh(0.5 * a), 2.0 * e / (1.0 + e)


@njit(cache=True)
def quantize_value(x, thr, lvl, closed):
    a = abs(x)
    lo = 0
    hi = thr.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        t = thr[mid]
        if a > t or (a == t and not closed[mid]):
            lo = mid + 1
        else:
            hi = mid
    v = lvl[lo]
    if x < 0.0 and v > 0.0:
        return -v
    return v


@njit(cache=True)
def cn_pass(alg, alpha, beta, ceiling, cn_ptr, cn_edges, v2c, c2v,
            thr, lvl, closed, qcn, s1, s2, s3, s4):
    """Check-node update for every CN. ``s1..s4`` are scratch of length max_dc."""
    m = cn_ptr.shape[0] - 1
    for j in range(m):
        p0 = cn_ptr[j]
        d = cn_ptr[j + 1] - p0
        if d == 0:
            continue
        if d == 1:
            c2v[cn_edges[p0]] = ceiling
            continue
        if alg <= OMS:
            min1 = math.inf
            min2 = math.inf
            idx = -1
            parity = False
            for k in range(d):
                x = v2c[cn_edges[p0 + k]]
                if x < 0.0:
                    parity = not parity
                a = abs(x)
                if a < min1:
                    min2 = min1
                    min1 = a
                    idx = k
                elif a < min2:
                    min2 = a
            for k in range(d):
                e = cn_edges[p0 + k]
                mag = min2 if k == idx else min1
                if alg == AMS:
                    mag = alpha * mag
                elif alg == OMS:
                    mag = max(mag - beta, 0.0)
                neg = parity != (v2c[e] < 0.0)
                out = -mag if (neg and mag > 0.0) else mag
                if qcn:
                    out = quantize_value(out, thr, lvl, closed)
                c2v[e] = out
            continue

        if alg == SPA_BOXPLUS or alg == SPA_APPROX:
            # forward fold in s1, backward fold in s2
            s1[0] = v2c[cn_edges[p0]]
            for k in range(1, d):
                x = v2c[cn_edges[p0 + k]]
                if alg == SPA_BOXPLUS:
                    s1[k] = boxplus(s1[k - 1], x)
                else:
                    s1[k] = boxplus_approx(s1[k - 1], x)
            s2[d - 1] = v2c[cn_edges[p0 + d - 1]]
            for k in range(d - 2, -1, -1):
                x = v2c[cn_edges[p0 + k]]
                if alg == SPA_BOXPLUS:
                    s2[k] = boxplus(x, s2[k + 1])
                else:
                    s2[k] = boxplus_approx(x, s2[k + 1])
            for k in range(d):
                if k == 0:
                    out = s2[1]
                elif k == d - 1:
                    out = s1[d - 2]
                elif alg == SPA_BOXPLUS:
                    out = boxplus(s1[k - 1], s2[k + 1])
                else:
                    out = boxplus_approx(s1[k - 1], s2[k + 1])
                if abs(out) > ceiling:
                    out = ceiling if out > 0.0 else -ceiling
                if qcn:
                    out = quantize_value(out, thr, lvl, closed)
                c2v[cn_edges[p0 + k]] = out + 0.0
            continue

        parity = False
        for k in range(d):
            if v2c[cn_edges[p0 + k]] < 0.0:
                parity = not parity
        if alg == SPA_PHI:
            # extrinsic sums of phi(|x|) via prefix (s1) and suffix (s2)
            acc = 0.0
            for k in range(d):
                acc += phi(abs(v2c[cn_edges[p0 + k]]))
                s1[k] = acc
            acc = 0.0
            for k in range(d - 1, -1, -1):
                acc += phi(abs(v2c[cn_edges[p0 + k]]))
                s2[k] = acc
            for k in range(d):
                if k == 0:
                    tot = s2[1]
                elif k == d - 1:
                    tot = s1[d - 2]
                else:
                    tot = s1[k - 1] + s2[k + 1]
                mag = min(phi(tot), ceiling)
                e = cn_edges[p0 + k]
                neg = parity != (v2c[e] < 0.0)
                out = -mag if (neg and mag > 0.0) else mag
                if qcn:
                    out = quantize_value(out, thr, lvl, closed)
                c2v[e] = out
        else:
            # product of tanh(|x|/2) carried as (P, 1 - P): s1/s2 forward, s3/s4 backward
            for k in range(d):
                t, u = tanh_pair(abs(v2c[cn_edges[p0 + k]]))
                if k == 0:
                    s1[0] = t
                    s2[0] = u
                else:
                    s2[k] = s2[k - 1] + u * s1[k - 1]
                    s1[k] = s1[k - 1] * t
            for k in range(d - 1, -1, -1):
                t, u = tanh_pair(abs(v2c[cn_edges[p0 + k]]))
                if k == d - 1:
                    s3[k] = t
                    s4[k] = u
                else:
                    s4[k] = s4[k + 1] + u * s3[k + 1]
                    s3[k] = s3[k + 1] * t
            for k in range(d):
                if k == 0:
                    P = s3[1]
                    C = s4[1]
                elif k == d - 1:
                    P = s1[d - 2]
                    C = s2[d - 2]
                else:
                    P = s1[k - 1] * s3[k + 1]
                    C = s2[k - 1] + s4[k + 1] * s1[k - 1]
                if C > 0.0:
                    mag = min(math.log1p(2.0 * P / C), ceiling)
                else:
                    mag = ceiling
                e = cn_edges[p0 + k]
                neg = parity != (v2c[e] < 0.0)
                out = -mag if (neg and mag > 0.0) else mag
                if qcn:
                    out = quantize_value(out, thr, lvl, closed)
                c2v[e] = out


@njit(cache=True)
def vn_pass(lch, vn_ptr, c2v, v2c, totals, thr, lvl, closed, qvn):
    """Variable-node update: extrinsic sums in edge order, then totals."""
    n = lch.shape[0]
    for i in range(n):
        p0 = vn_ptr[i]
        p1 = vn_ptr[i + 1]
        s = lch[i]
        for f in range(p0, p1):
            s += c2v[f]
        totals[i] = s
        for e in range(p0, p1):
            t = lch[i]
            for f in range(p0, p1):
                if f != e:
                    t += c2v[f]
            if qvn:
                t = quantize_value(t, thr, lvl, closed)
            v2c[e] = t


@njit(cache=True)
def _accumulate(values, hist_edges, hist_counts):
    nb = hist_counts.shape[0]
    for e in range(values.shape[0]):
        a = abs(values[e])
        k = np.searchsorted(hist_edges, a, side="right") - 1
        if k < 0:
            k = 0
        elif k >= nb:
            k = nb - 1
        hist_counts[k] += 1


@njit(cache=True)
def _peak(values, cur):
    for e in range(values.shape[0]):
        a = abs(values[e])
        if a > cur:
            cur = a
    return cur


@njit(cache=True, nogil=True)
def decode_frame(llr, vn_ptr, cn_ptr, cn_edges, edge_vn, alg, alpha, beta, ceiling,
                 max_iters, stop, thr, lvl, closed, qch, qvn, qcn,
                 v2c, c2v, totals, bits, trace, hist_edges, hist_counts):
    """Decode one frame in place. Returns (converged, iterations, ties, peak).

    ``trace`` has shape (max_iters, n) to record hard decisions per iteration,
    or (0, n) to skip. ``hist_counts`` of length 0 disables histogramming.
    """
    n = llr.shape[0]
    m = cn_ptr.shape[0] - 1
    maxdc = 1
    for j in range(m):
        maxdc = max(maxdc, cn_ptr[j + 1] - cn_ptr[j])
    s1 = np.empty(maxdc)
    s2 = np.empty(maxdc)
    s3 = np.empty(maxdc)
    s4 = np.empty(maxdc)
    lch = np.empty(n)
    for i in range(n):
        lch[i] = quantize_value(llr[i], thr, lvl, closed) if qch else llr[i]
    for i in range(n):
        for e in range(vn_ptr[i], vn_ptr[i + 1]):
            v2c[e] = lch[i]
    hist = hist_counts.shape[0] > 0
    record = trace.shape[0] > 0
    peak = _peak(v2c, 0.0)
    if hist:
        _accumulate(v2c, hist_edges, hist_counts)
    converged = False
    it = 0
    ties = 0
    while it < max_iters:
        cn_pass(alg, alpha, beta, ceiling, cn_ptr, cn_edges, v2c, c2v,
                thr, lvl, closed, qcn, s1, s2, s3, s4)
        vn_pass(lch, vn_ptr, c2v, v2c, totals, thr, lvl, closed, qvn)
        it += 1
        peak = _peak(c2v, peak)
        peak = _peak(v2c, peak)
        if hist:
            _accumulate(c2v, hist_edges, hist_counts)
            _accumulate(v2c, hist_edges, hist_counts)
        ties = 0
        for i in range(n):
            bits[i] = 1 if totals[i] < 0.0 else 0
            if totals[i] == 0.0:
                ties += 1
        if record:
            for i in range(n):
                trace[it - 1, i] = bits[i]
        ok = True
        for j in range(m):
            par = 0
            for k in range(cn_ptr[j], cn_ptr[j + 1]):
                par ^= bits[edge_vn[cn_edges[k]]]
            if par != 0:
                ok = False
                break
        converged = ok
        if ok and stop:
            break
    return converged, it, ties, peak


@njit(cache=True, nogil=True)
def decode_many(llrs, vn_ptr, cn_ptr, cn_edges, edge_vn, alg, alpha, beta, ceiling,
                max_iters, stop, thr, lvl, closed, qch, qvn, qcn, hist_edges, hist_counts):
    """Decode a batch of frames (rows of ``llrs``).

    Returns per-frame converged flags, iteration counts, decoded Hamming
    weights and peak message magnitudes.
    """
    nf = llrs.shape[0]
    n = llrs.shape[1]
    ne = edge_vn.shape[0]
    conv = np.zeros(nf, dtype=np.bool_)
    iters = np.zeros(nf, dtype=np.int64)
    weight = np.zeros(nf, dtype=np.int64)
    peaks = np.zeros(nf)
    v2c = np.empty(ne)
    c2v = np.empty(ne)
    totals = np.empty(n)
    bits = np.empty(n, dtype=np.uint8)
    trace = np.empty((0, n), dtype=np.uint8)
    for f in range(nf):
        c, it, _, pk = decode_frame(llrs[f], vn_ptr, cn_ptr, cn_edges, edge_vn, alg, alpha, beta,
                                    ceiling, max_iters, stop, thr, lvl, closed, qch, qvn, qcn,
                                    v2c, c2v, totals, bits, trace, hist_edges, hist_counts)
        conv[f] = c
        iters[f] = it
        w = 0
        for i in range(n):
            w += bits[i]
        weight[f] = w
        peaks[f] = pk
    return conv, iters, weight, peaks
