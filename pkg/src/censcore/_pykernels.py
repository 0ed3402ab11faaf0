"""Pure-Python (numpy) implementations of the hot kernels.

Selected by :mod:`censcore.kernels` when the compiled extension is not
available. Signatures match ``censcore._ckernels`` exactly; inputs are
1-D contiguous float64 arrays prepared by the dispatcher.
"""
from __future__ import annotations

import bisect
import math

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 100_000
_LN2 = math.log(2.0)

NAME = "python"


def reg_lower_gamma(s, x):
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[np.isinf(x)] = 1.0
    live = (x > 0) & np.isfinite(x)
    ser = live & (x < s + 1.0)
    frac = live & ~ser

    if ser.any():
        ss, xs = s[ser], x[ser]
        term = 1.0 / ss
        total = term.copy()
        ap = ss.copy()
        active = np.ones(ss.shape, dtype=bool)
        for _ in range(_MAX_ITER):
            ap[active] += 1.0
            term[active] *= xs[active] / ap[active]
            total[active] += term[active]
            active &= np.abs(term) >= np.abs(total) * _EPS
            if not active.any():
                break
        else:
            raise ConvergenceError("incomplete gamma series did not converge")
        val = total * np.exp(ss * np.log(xs) - xs - gammaln(ss))
        out[ser] = np.minimum(val, 1.0)

    if frac.any():
        ss, xs = s[frac], x[frac]
        b = xs + 1.0 - ss
        c = np.full(ss.shape, 1.0 / _TINY)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(ss.shape, dtype=bool)
        for i in range(1, _MAX_ITER):
            an = -i * (i - ss[active])
            b[active] += 2.0
            da = an * d[active] + b[active]
            da[np.abs(da) < _TINY] = _TINY
            ca = b[active] + an / c[active]
            ca[np.abs(ca) < _TINY] = _TINY
            da = 1.0 / da
            delta = da * ca
            d[active] = da
            c[active] = ca
            h[active] *= delta
            done = np.abs(delta - 1.0) < _EPS
            idx = np.flatnonzero(active)
            active[idx[done]] = False
            if not active.any():
                break
        else:
            raise ConvergenceError("incomplete gamma fraction did not converge")
        q = np.exp(ss * np.log(xs) - xs - gammaln(ss)) * h
        out[frac] = np.maximum(1.0 - q, 0.0)
    return out


def gamma_cdf_pdf_integral(alpha, y, rel_tol, max_terms):
    """∫₀^{y/β} F_{α,β} f_{α+1,β}, via the positive-term series.

    Term n is ``c_n P(2α+1+n, 2y)`` with
    ``c_n = Γ(2α+1+n) / (Γ(α+1+n) Γ(α+1) 2^(2α+1+n))``.
    """
    alpha = np.asarray(alpha, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    live = y > 0
    if not live.any():
        return out
    al, yy = alpha[live], y[live]
    a = 2.0 * al + 1.0
    x2 = 2.0 * yy
    n_top = int(math.ceil(al.max())) + 150
    if n_top + 1 > max_terms:
        raise ConvergenceError(f"series needs {n_top + 1} terms, max_terms={max_terms}")

    # c_n forward by the ratio (a+n) / (2(α+1+n)), all factors < 1
    coef = np.empty((n_top + 1, al.size))
    coef[0] = np.exp(gammaln(a) - 2.0 * gammaln(al + 1.0) - a * _LN2)
    for n in range(n_top):
        coef[n + 1] = coef[n] * (a + n) / (2.0 * (al + 1.0 + n))

    p = reg_lower_gamma(a + n_top, x2)
    total = coef[n_top] * p
    last = total.copy()
    log_x2 = np.log(x2)
    for n in range(n_top - 1, -1, -1):
        s = a + n
        p = p + np.exp(s * log_x2 - x2 - gammaln(s + 1.0))
        total += coef[n] * p
    if np.any(last > rel_tol * total):
        raise ConvergenceError("gamma_cdf_pdf_integral series did not converge")
    out[live] = np.minimum(total, 1.0)
    return out


def ensemble_twcrps(members, t, tau, c_m):
    """Ensemble twCRPS for each row of ``members`` (n, m).

    Uses sum_ij |x_i - x_j| = 2 sum_k (2k - m + 1) x_(k) over sorted
    members. Sums run sequentially (cumsum) so results match the compiled
    kernel bit for bit.
    """
    srt = np.sort(np.minimum(members, tau), axis=1)
    tc = np.minimum(t, tau)
    m = srt.shape[1]
    first = np.cumsum(np.abs(srt - tc[:, None]), axis=1)[:, -1]
    w = 2.0 * np.arange(m) - m + 1.0
    pair = np.cumsum(srt * w, axis=1)[:, -1]
    return first / m - (2.0 * pair) / (2.0 * m * c_m)


def concordance_counts(p, t, tau):
    """Numerator and denominator of the empirical c-index.

    O(n log n): cases are visited in decreasing ``t``; a Fenwick tree over
    forecast ranks counts later-failing cases with lower or equal risk.
    """
    n = p.size
    ranks_sorted = np.unique(p)
    rank = np.searchsorted(ranks_sorted, p)
    k = ranks_sorted.size
    tree = [0] * (k + 1)
    same = [0] * k
    inserted = 0

    def prefix(r):
        # count of inserted ranks < r
        acc = 0
        while r > 0:
            acc += tree[r]
            r -= r & -r
        return acc

    order = np.argsort(-t, kind="stable")
    t_sorted = t[order]
    num2 = 0  # twice the numerator, kept integral
    den = 0
    i = 0
    while i < n:
        j = i
        while j < n and t_sorted[j] == t_sorted[i]:
            j += 1
        if t_sorted[i] <= tau:
            for idx in order[i:j]:
                r = int(rank[idx])
                lower = prefix(r)
                ties = same[r]
                num2 += 2 * lower + ties
                den += inserted
        for idx in order[i:j]:
            r = int(rank[idx])
            same[r] += 1
            pos = r + 1
            while pos <= k:
                tree[pos] += 1
                pos += pos & -pos
        inserted += j - i
        i = j
    return num2 / 2.0, float(den)


def minmax_isotonic(values, offsets, alpha):
    """Min-max isotonic fit of lower empirical ``alpha``-quantiles.

    ``values[offsets[b]:offsets[b+1]]`` holds the targets of block ``b``
    (blocks ordered by forecast). Returns one fitted value per block:
    ``min_{j >= i} max_{k <= i} q(blocks k..j)``.
    """
    nb = offsets.size - 1
    best_lower = np.full(nb, -np.inf)  # running max over k <= i, indexed by j
    fitted = np.empty(nb)
    for i in range(nb):
        window: list[float] = []
        for j in range(i, nb):
            for v in values[offsets[j]:offsets[j + 1]]:
                bisect.insort(window, float(v))
            size = len(window)
            q = window[max(1, math.ceil(alpha * size - 1e-9)) - 1]
            if q > best_lower[j]:
                best_lower[j] = q
        fitted[i] = best_lower[i:].min()
    return fitted
