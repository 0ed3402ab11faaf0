# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same signatures as censcore._pykernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, lgamma, fabs, ceil, fmin, INFINITY, isinf
from libc.stdlib cimport malloc, free
from libc.string cimport memmove

from .errors import ConvergenceError

cnp.import_array()

NAME = "cython"

cdef double EPS = 1e-16
cdef double TINY = 1e-300
cdef long MAX_ITER = 100000
cdef double LN2 = 0.6931471805599453


cdef int _p_lower(double s, double x, double* out) noexcept nogil:
    # returns 0 on success, 1 on non-convergence
    cdef double term, total, ap, b, c, d, h, an, delta
    cdef long i
    if x <= 0.0:
        out[0] = 0.0
        return 0
    if isinf(x):
        out[0] = 1.0
        return 0
    if x < s + 1.0:
        term = 1.0 / s
        total = term
        ap = s
        for i in range(MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if fabs(term) < fabs(total) * EPS:
                out[0] = fmin(1.0, total * exp(s * log(x) - x - lgamma(s)))
                return 0
        return 1
    b = x + 1.0 - s
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if fabs(d) < TINY:
            d = TINY
        c = b + an / c
        if fabs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < EPS:
            h = 1.0 - exp(s * log(x) - x - lgamma(s)) * h
            out[0] = h if h > 0.0 else 0.0
            return 0
    return 1


def reg_lower_gamma(const double[::1] s, const double[::1] x):
    cdef Py_ssize_t n = x.shape[0], i
    cdef cnp.ndarray[cnp.double_t, ndim=1] res = np.empty(n)
    cdef double[::1] out = res
    cdef int bad = 0
    with nogil:
        for i in range(n):
            bad |= _p_lower(s[i], x[i], &out[i])
    if bad:
        raise ConvergenceError("incomplete gamma did not converge")
    return res


def gamma_cdf_pdf_integral(const double[::1] alpha, const double[::1] y, double rel_tol, long max_terms):
    cdef Py_ssize_t n = y.shape[0], i
    cdef long k, n_top
    cdef double al, a, x2, coef, p, total, last, s, lx, lt
    cdef cnp.ndarray[cnp.double_t, ndim=1] res = np.zeros(n)
    cdef double[::1] out = res
    cdef int bad = 0
    with nogil:
        for i in range(n):
            if y[i] <= 0.0:
                continue
            al = alpha[i]
            a = 2.0 * al + 1.0
            x2 = 2.0 * y[i]
            n_top = <long>ceil(al) + 150
            if n_top + 1 > max_terms:
                bad = 2
                break
            # c_N by forward ratio recurrence, then walk back down with P
            coef = exp(lgamma(a) - 2.0 * lgamma(al + 1.0) - a * LN2)
            for k in range(n_top):
                coef *= (a + k) / (2.0 * (al + 1.0 + k))
            if _p_lower(a + n_top, x2, &p):
                bad = 1
                break
            total = coef * p
            last = total
            lx = log(x2)
            # log of the Poisson-type term x^s e^-x / Gamma(s+1), walked down in s
            lt = (a + n_top) * lx - x2 - lgamma(a + n_top + 1.0)
            for k in range(n_top - 1, -1, -1):
                s = a + k
                lt += log(s + 1.0) - lx
                p += exp(lt)
                coef *= 2.0 * (al + 1.0 + k) / (a + k)
                total += coef * p
            if last > rel_tol * total:
                bad = 1
                break
            out[i] = fmin(total, 1.0)
    if bad == 2:
        raise ConvergenceError("series needs more terms than max_terms")
    if bad:
        raise ConvergenceError("gamma_cdf_pdf_integral series did not converge")
    return res


def ensemble_twcrps(const double[:, ::1] members, const double[::1] t, double tau, double c_m):
    """Sorted-member form with sequential sums; bit-identical to the Python kernel."""
    cdef Py_ssize_t n = members.shape[0], m = members.shape[1], i, k
    cdef double tc, first, pair
    cdef double[:, ::1] srt = np.ascontiguousarray(np.sort(np.minimum(np.asarray(members), tau), axis=1))
    cdef cnp.ndarray[cnp.double_t, ndim=1] res = np.empty(n)
    cdef double[::1] out = res
    with nogil:
        for i in range(n):
            tc = fmin(t[i], tau)
            first = 0.0
            pair = 0.0
            for k in range(m):
                first += fabs(srt[i, k] - tc)
                pair += srt[i, k] * (2.0 * k - m + 1.0)
            out[i] = first / m - (2.0 * pair) / (2.0 * m * c_m)
    return res


def concordance_counts(const double[::1] p, const double[::1] t, double tau):
    """Pair counts by a sweep over decreasing t with a Fenwick tree on risk ranks."""
    cdef Py_ssize_t n = p.shape[0], i, j, q, r, pos, k, inserted = 0
    cdef long long num2 = 0, den = 0, lower
    cdef double tv
    levels = np.unique(np.asarray(p))
    cdef long[::1] rank = np.searchsorted(levels, np.asarray(p)).astype(np.int_)
    cdef long[::1] order = np.argsort(-np.asarray(t), kind="stable").astype(np.int_)
    k = levels.shape[0]
    cdef long long[::1] tree = np.zeros(k + 1, dtype=np.int64)
    cdef long long[::1] same = np.zeros(max(k, 1), dtype=np.int64)
    with nogil:
        i = 0
        while i < n:
            tv = t[order[i]]
            j = i
            while j < n and t[order[j]] == tv:
                j += 1
            if tv <= tau:
                for q in range(i, j):
                    r = rank[order[q]]
                    lower = 0
                    pos = r
                    while pos > 0:
                        lower += tree[pos]
                        pos -= pos & -pos
                    num2 += 2 * lower + same[r]
                    den += inserted
            for q in range(i, j):
                r = rank[order[q]]
                same[r] += 1
                pos = r + 1
                while pos <= k:
                    tree[pos] += 1
                    pos += pos & -pos
            inserted += j - i
            i = j
    return num2 / 2.0, <double>den


def minmax_isotonic(const double[::1] values, const long[::1] offsets, double alpha):
    cdef Py_ssize_t nb = offsets.shape[0] - 1, nv = values.shape[0]
    cdef Py_ssize_t i, j, v, size, lo, hi, mid, idx
    cdef double q, val, best
    cdef double* window = <double*>malloc(max(nv, 1) * sizeof(double))
    cdef double* best_lower = <double*>malloc(max(nb, 1) * sizeof(double))
    cdef cnp.ndarray[cnp.double_t, ndim=1] res = np.empty(nb)
    cdef double[::1] fitted = res
    if window == NULL or best_lower == NULL:
        free(window)
        free(best_lower)
        raise MemoryError()
    try:
        with nogil:
            for j in range(nb):
                best_lower[j] = -INFINITY
            for i in range(nb):
                size = 0
                for j in range(i, nb):
                    for v in range(offsets[j], offsets[j + 1]):
                        val = values[v]
                        # insertion point after equal elements
                        lo = 0
                        hi = size
                        while lo < hi:
                            mid = (lo + hi) // 2
                            if val < window[mid]:
                                hi = mid
                            else:
                                lo = mid + 1
                        memmove(&window[lo + 1], &window[lo], (size - lo) * sizeof(double))
                        window[lo] = val
                        size += 1
                    idx = <Py_ssize_t>ceil(alpha * size - 1e-9)
                    if idx < 1:
                        idx = 1
                    q = window[idx - 1]
                    if q > best_lower[j]:
                        best_lower[j] = q
                best = INFINITY
                for j in range(i, nb):
                    if best_lower[j] < best:
                        best = best_lower[j]
                fitted[i] = best
    finally:
        free(window)
        free(best_lower)
    return res
