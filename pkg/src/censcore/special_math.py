"""Scalar special functions behind the gamma-distribution scores.

These are the reference implementations. Array versions used by the
scoring code live in :mod:`censcore.kernels` and are checked against the
functions here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 100_000

LN2 = math.log(2.0)


@dataclass(frozen=True)
class SeriesControl:
    """Convergence control for the incomplete hypergeometric series."""

    rel_tol: float = 1e-12
    max_terms: int = 10_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_SERIES = SeriesControl()


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for positive ``x``."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def beta_fn(a: float, b: float) -> float:
    """Beta function B(a, b) = Γ(a)Γ(b)/Γ(a+b)."""
    if not (a > 0 and b > 0):
        raise DomainError(f"beta_fn requires a, b > 0, got ({a}, {b})")
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def _lower_series(s: float, x: float) -> float:
    # P(s, x) = x^s e^-x / Γ(s+1) * sum_k x^k / ((s+1)...(s+k))
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(s * math.log(x) - x - math.lgamma(s))
    raise ConvergenceError(f"incomplete gamma series did not converge (s={s}, x={x})")


def _upper_fraction(s: float, x: float) -> float:
    # Q(s, x) by the Legendre continued fraction, modified Lentz evaluation
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(s * math.log(x) - x - math.lgamma(s)) * h
    raise ConvergenceError(f"incomplete gamma fraction did not converge (s={s}, x={x})")


def reg_lower_gamma(s: float, x: float) -> float:
    """Regularized lower incomplete gamma function P(s, x) = γ(s, x)/Γ(s).

    Uses the power series when ``x < s + 1`` and the continued fraction
    for the upper function otherwise.
    """
    if not s > 0:
        raise DomainError(f"reg_lower_gamma requires s > 0, got {s}")
    if not x >= 0:
        raise DomainError(f"reg_lower_gamma requires x >= 0, got {x}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < s + 1.0:
        return min(1.0, _lower_series(s, x))
    return max(0.0, 1.0 - _upper_fraction(s, x))


def reg_upper_gamma(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x) = 1 - P(s, x)."""
    if not s > 0:
        raise DomainError(f"reg_upper_gamma requires s > 0, got {s}")
    if not x >= 0:
        raise DomainError(f"reg_upper_gamma requires x >= 0, got {x}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < s + 1.0:
        return max(0.0, 1.0 - _lower_series(s, x))
    return min(1.0, _upper_fraction(s, x))


def _poisson_increment(s: float, x: float) -> float:
    # x^s e^-x / Γ(s+1), the gap P(s, x) - P(s+1, x)
    return math.exp(s * math.log(x) - x - math.lgamma(s + 1.0))


def _incomplete_pochhammer_block(a: float, x: float, start: int, stop: int) -> list[float]:
    """P(a+n, x) for n in [start, stop], by downward recursion from ``stop``."""
    p = reg_lower_gamma(a + stop, x)
    out = [0.0] * (stop - start + 1)
    out[-1] = p
    for n in range(stop - 1, start - 1, -1):
        p += _poisson_increment(a + n, x)
        out[n - start] = p
    return out


def lower_incomplete_2f1(
    a: float,
    tau_arg: float,
    b: float,
    c: float,
    z: float,
    ctl: SeriesControl = DEFAULT_SERIES,
) -> float:
    """Lower incomplete Gauss hypergeometric function.

    Sums ``(a, tau)_n (b)_n / (c)_n * z^n / n!`` where the lower
    incomplete Pochhammer symbol is ``(a, tau)_n = γ(a+n, tau)/Γ(a)``.
    The incomplete gamma values are produced in blocks by downward
    recursion, which is stable, rather than one special-function call
    per term.

    Summation stops once two consecutive terms are below
    ``ctl.rel_tol`` relative to the partial sum.

    Note that for ``z = -1`` and large ``tau_arg`` the terms alternate
    and grow before they decay, so accuracy is limited by cancellation;
    see :func:`lower_incomplete_2f1_neg1` for a cancellation-free
    evaluation of the case used by the gamma twCRPS.
    """
    if not (a > 0 and tau_arg > 0 and b > 0 and c > 0):
        raise DomainError("lower_incomplete_2f1 requires a, tau, b, c > 0")
    if z == 0:
        return reg_lower_gamma(a, tau_arg)

    log_abs_z = math.log(abs(z))
    negative = z < 0
    # log of (a)_n (b)_n / ((c)_n n!) |z|^n, advanced by recurrence
    log_coef = 0.0
    total = 0.0
    quiet = 0
    block = 64
    n = 0
    while n < ctl.max_terms:
        stop = min(n + block - 1, ctl.max_terms - 1)
        probs = _incomplete_pochhammer_block(a, tau_arg, n, stop)
        for p in probs:
            if p > 0:
                term = math.exp(math.log(p) + log_coef)
            else:
                term = 0.0
            if negative and n % 2 == 1:
                term = -term
            total += term
            if abs(term) <= ctl.rel_tol * abs(total) or term == 0.0:
                quiet += 1
                if quiet >= 2:
                    return total
            else:
                quiet = 0
            log_coef += (
                math.log(a + n) + math.log(b + n) - math.log(c + n)
                - math.log(n + 1.0) + log_abs_z
            )
            n += 1
        block *= 2
    raise ConvergenceError(
        f"lower_incomplete_2f1 did not converge within {ctl.max_terms} terms"
    )


def lower_incomplete_2f1_neg1(
    alpha: float, y: float, ctl: SeriesControl = DEFAULT_SERIES
) -> float:
    """``2F1^l((2α+1, y), α; α+1; -1)`` without cancellation.

    Expanding γ(α, u) with Kummer's positive series instead of the
    alternating power series gives the identity

        2F1^l((2α+1, y), α; α+1; -1) = 2^-(2α+1) 2F1^l((2α+1, 2y), 1; α+1; 1/2),

    whose terms are all positive and decay at least geometrically.
    """
    if not (alpha > 0 and y > 0):
        raise DomainError("lower_incomplete_2f1_neg1 requires alpha, y > 0")
    a = 2.0 * alpha + 1.0
    return math.exp(-a * LN2) * lower_incomplete_2f1(a, 2.0 * y, 1.0, alpha + 1.0, 0.5, ctl)


def gamma_cdf_pdf_integral(alpha: float, y: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """∫₀^{y/β} F_{α,β}(x) f_{α+1,β}(x) dx, which does not depend on β.

    Equals ``Γ(2α+1)/Γ(α+1)² · 2F1^l((2α+1, y), α; α+1; -1)``.
    """
    if y <= 0:
        return 0.0
    log_norm = math.lgamma(2.0 * alpha + 1.0) - 2.0 * math.lgamma(alpha + 1.0)
    return math.exp(log_norm) * lower_incomplete_2f1_neg1(alpha, y, ctl)
