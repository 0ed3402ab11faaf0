"""Scoring rules for predictive distributions of event times.

Lower scores are better throughout. Generic rules integrate the Brier
integrand numerically; gamma forecasts have vectorized closed forms, and
ensembles use exact kernel (pair-sum) forms.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from . import kernels
from .distributions import (
    CensoredDist,
    EmpiricalDist,
    GammaDist,
    PointMass,
    PredictiveDistribution,
)
from .errors import ConvergenceError, DomainError, UnsupportedDistributionError
from .special_math import DEFAULT_SERIES, SeriesControl


@dataclass(frozen=True)
class QuadratureControl:
    """Absolute tolerance and subdivision limit for adaptive quadrature."""

    abs_tol: float = 1e-8
    max_subdivisions: int = 2_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureControl()


class WeightFunction:
    """Threshold weight w(s) >= 0 with bounded support [0, bound].

    Use the constructors :meth:`indicator_closed`, :meth:`indicator_halfopen`
    and :meth:`custom`.
    """

    def __init__(self, kind: str, bound: float, func: Callable | None = None):
        if kind not in ("indicator_closed", "indicator_halfopen", "custom"):
            raise DomainError(f"unknown weight kind {kind!r}")
        if not (bound > 0 and math.isfinite(bound)):
            raise DomainError(f"weight support bound must be positive and finite, got {bound}")
        if kind == "custom" and func is None:
            raise DomainError("custom weight needs a callable")
        self.kind = kind
        self.bound = float(bound)
        self._func = func

    @classmethod
    def indicator_closed(cls, tau: float) -> "WeightFunction":
        """w = 1 on [0, tau]."""
        return cls("indicator_closed", tau)

    @classmethod
    def indicator_halfopen(cls, tau: float) -> "WeightFunction":
        """w = 1 on [0, tau)."""
        return cls("indicator_halfopen", tau)

    @classmethod
    def custom(cls, func: Callable, support_bound: float) -> "WeightFunction":
        """Arbitrary nonnegative ``func``, taken as zero beyond ``support_bound``."""
        return cls("custom", support_bound, func)

    @property
    def is_indicator(self) -> bool:
        return self.kind != "custom"

    def __repr__(self):
        return f"WeightFunction({self.kind!r}, bound={self.bound:g})"

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s >= 0) & ((s <= self.bound) if self.kind != "indicator_halfopen" else (s < self.bound))
        if self.kind == "custom":
            vals = np.vectorize(lambda x: float(self._func(x)), otypes=[float])(s)
            if np.any(vals[inside] < 0):
                raise DomainError("weight function returned a negative value")
            out = np.where(inside, vals, 0.0)
        else:
            out = inside.astype(float)
        return float(out) if out.ndim == 0 else out

    def chaining(self, x) -> float:
        """v(x) = integral of w over [0, x)."""
        x = float(x)
        if self.is_indicator:
            return min(max(x, 0.0), self.bound)
        hi = min(max(x, 0.0), self.bound)
        if hi <= 0:
            return 0.0
        val, _ = integrate.quad(lambda s: self(s), 0.0, hi, limit=DEFAULT_QUAD.max_subdivisions)
        return val

    def check_provisional(self, probes: int = 101) -> bool:
        """Positive on a probe grid of [0, bound) and zero beyond it."""
        grid = np.linspace(0.0, self.bound, probes, endpoint=False)
        beyond = self.bound * np.array([1.0 + 1e-9, 1.5, 2.0])
        return bool(np.all(np.asarray(self(grid)) > 0) and np.all(np.asarray(self(beyond)) == 0))


def _as_weight(w) -> WeightFunction:
    if isinstance(w, WeightFunction):
        return w
    return WeightFunction.indicator_closed(float(w))


# ---------------------------------------------------------------- binary scores

class BinaryScore:
    """Binary scoring rule generated from a convex ``phi`` by the Savage form.

    Parameters
    ----------
    phi : callable
        Strictly convex function on [0, 1].
    dphi : callable
        A subgradient of ``phi``; may return +/-inf at the endpoints.
    name : str
    """

    def __init__(self, phi: Callable, dphi: Callable, name: str = "custom"):
        self.phi = phi
        self.dphi = dphi
        self.name = name

    def __repr__(self):
        return f"BinaryScore({self.name!r})"

    def check_convex(self, n: int = 201) -> bool:
        """Midpoint strict-convexity spot check on an n-point grid."""
        g = np.linspace(0.0, 1.0, n)
        a, b = np.meshgrid(g, g)
        keep = a < b
        a, b = a[keep], b[keep]
        mid = np.vectorize(self.phi, otypes=[float])(0.5 * (a + b))
        ends = 0.5 * (np.vectorize(self.phi, otypes=[float])(a) + np.vectorize(self.phi, otypes=[float])(b))
        return bool(np.all(mid < ends))

    def score(self, p, outcome):
        return binary_score_from_phi(self, p, outcome)


def _neg_entropy(p):
    p = float(p)
    if 0.0 < p < 1.0:
        return p * math.log(p) + (1.0 - p) * math.log1p(-p)
    return 0.0


def _neg_entropy_grad(p):
    p = float(p)
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    return math.log(p) - math.log1p(-p)


NEGATIVE_BINARY_ENTROPY = BinaryScore(_neg_entropy, _neg_entropy_grad, "negative_binary_entropy")


def _times(c: float, x: float) -> float:
    # 0 * inf = 0, as in the regular-score convention
    return 0.0 if c == 0.0 else c * x


def binary_score_from_phi(b: BinaryScore, p: float, outcome: int) -> float:
    """Savage-form score of probability ``p`` for a binary ``outcome``.

    ``S(p, 0) = phi(0) - phi(p) + p phi'(p)`` and
    ``S(p, 1) = phi(1) - phi(p) - (1 - p) phi'(p)``.
    """
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    if outcome not in (0, 1):
        raise DomainError(f"binary outcome must be 0 or 1, got {outcome}")
    phi_p = b.phi(p)
    g = b.dphi(p)
    if outcome == 0:
        return b.phi(0.0) - phi_p + _times(p, g)
    return b.phi(1.0) - phi_p - _times(1.0 - p, g)


# ---------------------------------------------------------------- quadrature

def _quad_pieces(func, knots, q: QuadratureControl) -> float:
    knots = np.unique(np.asarray(knots, dtype=float))
    pieces = len(knots) - 1
    if pieces <= 0:
        return 0.0
    tol = q.abs_tol / pieces
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi <= lo:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err, info = integrate.quad(
                func, lo, hi, epsabs=tol, epsrel=1e-10, limit=q.max_subdivisions, full_output=1
            )[:3]
        if not np.isfinite(val) or err > max(tol, 1e-10 * abs(val)) * 10:
            raise ConvergenceError(f"quadrature failed on [{lo:g}, {hi:g}] (error estimate {err:.3g})")
        total += val
    return total


def _brier_integral(F: PredictiveDistribution, t: float, lo: float, hi: float,
                    q: QuadratureControl, weight: WeightFunction | None = None) -> float:
    """Integral over [lo, hi] of w(s) (1{s >= t} - F(s))^2."""
    if hi <= lo:
        return 0.0
    bps = F.breakpoints()
    inner = [x for x in np.append(bps, t) if lo < x < hi]
    knots = [lo, *inner, hi]
    if weight is None:
        def f(s):
            return ((s >= t) - float(F.cdf(s))) ** 2
    else:
        def f(s):
            return weight(s) * ((s >= t) - float(F.cdf(s))) ** 2
    return _quad_pieces(f, knots, q)


def _require_scalar(F: PredictiveDistribution):
    base = F.base if isinstance(F, CensoredDist) else F
    if isinstance(base, GammaDist) and base.batch_shape != ():
        raise DomainError("generic scores take a single distribution; use the *_gamma functions for batches")


def _discrete_members(F: PredictiveDistribution):
    """Atoms of a discrete forecast, with censoring applied, else None."""
    tau = math.inf
    if isinstance(F, CensoredDist):
        tau, F = F.tau, F.base
    if isinstance(F, EmpiricalDist):
        return np.minimum(F.members, tau)
    if isinstance(F, PointMass):
        return np.array([min(F.location, tau)])
    return None


def _kernel(members: np.ndarray, t: float, tau: float, c_m: float) -> float:
    m = np.ascontiguousarray(members, dtype=float).reshape(1, -1)
    return float(kernels.ensemble_twcrps(m, np.array([t]), tau, c_m)[0])


# ---------------------------------------------------------------- CRPS family

def crps(F: PredictiveDistribution, t: float, q: QuadratureControl = DEFAULT_QUAD) -> float:
    """Continuous ranked probability score.

    Discrete forecasts use the exact kernel form
    ``E|X - t| - E|X - X'| / 2``; others integrate
    ``(1{s >= t} - F(s))^2`` adaptively, truncated where ``1 - F`` is
    negligible.
    """
    t = float(t)
    _require_scalar(F)
    atoms = _discrete_members(F)
    if atoms is not None:
        return _kernel(atoms, t, math.inf, atoms.size)
    hi = max(F.upper_bound(), t)
    return _brier_integral(F, t, 0.0, hi, q)


def crps_gamma(d: GammaDist, t):
    """Closed-form CRPS of (possibly shifted, possibly batched) gamma forecasts.

    For the unshifted law,
    ``t(2F(t) - 1) - (a/b)(2F_{a+1}(t) - 1) - a/(b pi) B(a + 1/2, 1/2)``;
    a shift ``a0`` contributes ``max(a0 - t, 0)`` and translates ``t``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("realizations must be nonnegative")
    alpha, beta, shift, t = np.broadcast_arrays(d._shape, d._rate, d._shift, t)
    u = np.maximum(t - shift, 0.0)
    F_a = kernels.reg_lower_gamma(alpha, beta * u)
    F_a1 = kernels.reg_lower_gamma(alpha + 1.0, beta * u)
    log_b = gammaln(alpha + 0.5) + gammaln(0.5) - gammaln(alpha + 1.0)
    base = (
        u * (2.0 * F_a - 1.0)
        - alpha / beta * (2.0 * F_a1 - 1.0)
        - alpha / (beta * math.pi) * np.exp(log_b)
    )
    out = np.maximum(shift - t, 0.0) + base
    return float(out) if out.ndim == 0 else out


def twcrps(F: PredictiveDistribution, t: float, w, q: QuadratureControl = DEFAULT_QUAD) -> float:
    """Threshold-weighted CRPS ``int w(s) (1{s >= t} - F(s))^2 ds``.

    ``w`` is a :class:`WeightFunction` or a number tau (indicator on
    [0, tau]). With an indicator weight, discrete forecasts use the exact
    chaining form ``E|[X] - [t]| - E|[X] - [X']| / 2`` with ``[.]`` the
    censoring at tau.
    """
    t = float(t)
    w = _as_weight(w)
    _require_scalar(F)
    if w.is_indicator:
        atoms = _discrete_members(F)
        if atoms is not None:
            return _kernel(atoms, t, w.bound, atoms.size)
        return _brier_integral(F, t, 0.0, w.bound, q)
    return _brier_integral(F, t, 0.0, w.bound, q, weight=w)


def _twcrps_gamma_unshifted(alpha, beta, t, tau, ctl):
    # closed form for t >= 0, tau > 0, elementwise
    om = np.minimum(t, tau)
    F_tau = kernels.reg_lower_gamma(alpha, beta * tau)
    F_om = kernels.reg_lower_gamma(alpha, beta * om)
    G_tau = kernels.reg_lower_gamma(alpha + 1.0, beta * tau)
    G_om = kernels.reg_lower_gamma(alpha + 1.0, beta * om)
    J = kernels.gamma_cdf_pdf_integral(alpha, beta * tau, ctl)
    r = alpha / beta
    val = (
        tau * (1.0 - F_tau) ** 2
        + om * (2.0 * F_om - 1.0)
        + 2.0 * r * (G_tau - G_om)
        - 2.0 * r * J
    )
    # the closed form is a difference of O(tau) terms; clip roundoff below 0
    return np.maximum(val, 0.0)


def twcrps_gamma(d: GammaDist, t, tau, ctl: SeriesControl = DEFAULT_SERIES):
    """Closed-form twCRPS with indicator weight on [0, tau] for gamma forecasts.

    Handles shifts by splitting [0, tau] at the shift: below it F = 0 and
    the integrand is 1{s >= t}; above it the unshifted formula applies in
    translated coordinates. Vectorized over the batch of ``d`` and ``t``.
    """
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise DomainError("realizations must be nonnegative")
    if np.any(~(tau > 0)):
        raise DomainError("tau must be positive")
    alpha, beta, shift, t, tau = np.broadcast_arrays(d._shape, d._rate, d._shift, t, tau)
    flat = [np.ascontiguousarray(x.ravel()) for x in (alpha, beta, shift, t, tau)]
    al, be, sh, tt, ta = flat
    out = np.maximum(np.minimum(sh, ta) - tt, 0.0)
    live = sh < ta
    if live.any():
        out[live] += _twcrps_gamma_unshifted(
            al[live], be[live], np.maximum(tt[live] - sh[live], 0.0), ta[live] - sh[live], ctl
        )
    out = out.reshape(t.shape)
    return float(out) if out.ndim == 0 else out


def twcrps_ensemble(members, t, tau: float, fairness: str = "fair"):
    """Ensemble twCRPS estimator.

    ``(1/m) sum |[x_i] - [t]| - 1/(2 m c_m) sum_ij |[x_i] - [x_j]|`` with
    ``c_m = m - 1`` (``"fair"``) or ``c_m = m`` (``"empirical"``, exact for
    the ensemble's empirical CDF).

    Parameters
    ----------
    members : array_like
        Shape (m,) for one forecast, or (n, m) for n forecasts.
    t : float or array_like
        Realization(s), broadcast against the rows.
    tau : float
    fairness : {"fair", "empirical"}
    """
    x = np.asarray(members, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    m = x.shape[1]
    if m < 1:
        raise DomainError("ensemble needs at least one member")
    if fairness == "fair":
        if m < 2:
            raise DomainError("the fair estimator needs at least two members")
        c_m = m - 1.0
    elif fairness == "empirical":
        c_m = float(m)
    else:
        raise DomainError(f"fairness must be 'fair' or 'empirical', got {fairness!r}")
    if not float(tau) > 0:
        raise DomainError("tau must be positive")
    out = kernels.ensemble_twcrps(x, t, float(tau), c_m)
    return float(out[0]) if single else out


def surv_crps(F: PredictiveDistribution, t: float, tau: float, q: QuadratureControl = DEFAULT_QUAD) -> float:
    """Survival CRPS: CRPS(F, t) if t < tau, else ``int_0^tau F(s)^2 ds``.

    Not provisionally proper; kept as a reference exhibit.
    """
    if not tau > 0:
        raise DomainError("tau must be positive")
    if t < tau:
        return crps(F, t, q)
    return twcrps(F, tau, tau, q)


def surv_crps_gamma(d: GammaDist, t, tau, ctl: SeriesControl = DEFAULT_SERIES):
    """Vectorized survival CRPS for gamma forecasts."""
    t = np.asarray(t, dtype=float)
    tau_arr = np.broadcast_to(np.asarray(tau, dtype=float), np.broadcast_shapes(t.shape, d.batch_shape))
    full = np.asarray(crps_gamma(d, t))
    cens = np.asarray(twcrps_gamma(d, tau_arr, tau_arr, ctl))
    out = np.where(t < tau_arr, full, cens)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- density scores

def _density(F: PredictiveDistribution) -> GammaDist:
    if not getattr(F, "has_density", False):
        raise UnsupportedDistributionError(f"{type(F).__name__} has no density")
    return F


def log_score(F: PredictiveDistribution, t):
    """LogS = -ln f(t); +inf where the density vanishes."""
    return _neg(_density(F).logpdf(t))


def lin_score(F: PredictiveDistribution, t):
    """LinS = -f(t). Improper; provided for comparison only."""
    return _neg(_density(F).pdf(t))


def _neg(x):
    x = -np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def twlog_score(F: PredictiveDistribution, t, tau):
    """twLogS with weight 1 on [0, tau).

    ``-ln f(t)`` for ``t < tau`` and ``-ln(1 - F(tau))`` otherwise. Returns
    +inf (never raises) when the relevant density or mass is zero.
    Vectorized for gamma batches.
    """
    d = _density(F)
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(~(tau > 0)):
        raise DomainError("tau must be positive")
    with np.errstate(divide="ignore"):
        inside = -np.asarray(d.logpdf(np.minimum(t, tau)))
        tail = -np.log(np.asarray(d.sf(tau)))
    out = np.where(t < tau, inside, tail)
    return float(out) if out.ndim == 0 else out


def twlog_score_weighted(F: PredictiveDistribution, t: float, w: WeightFunction,
                         q: QuadratureControl = DEFAULT_QUAD) -> float:
    """twLogS for a general weight with values in [0, 1].

    ``-w(t) ln f(t) - (1 - w(t)) ln(1 - int w f)``, with 0 * inf = 0.
    """
    d = _density(F)
    w = _as_weight(w)
    mass = _weighted_mass(d, w, q)
    wt = float(w(t))
    if not 0.0 <= wt <= 1.0:
        raise DomainError("twLogS weights must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        a = -float(d.logpdf(t))
        b = -math.log(1.0 - mass) if mass < 1.0 else math.inf
    return _times(wt, a) + _times(1.0 - wt, b)


def _weighted_mass(d: PredictiveDistribution, w: WeightFunction, q: QuadratureControl) -> float:
    """int w(s) f(s) ds."""
    if w.is_indicator:
        # continuous F: endpoints carry no mass
        return float(d.cdf(w.bound))
    knots = [0.0, *[b for b in d.breakpoints() if 0 < b < w.bound], w.bound]
    return _quad_pieces(lambda s: w(s) * float(d.pdf(s)), knots, q)


def log_density_score(density: Callable, t: float) -> float:
    """LogS on a density callable, for use with :func:`weighted_density_score`."""
    v = float(density(t))
    return math.inf if v <= 0 else -math.log(v)


def weighted_density_score(
    F: PredictiveDistribution,
    t: float,
    w: WeightFunction,
    density_score: Callable = log_density_score,
    binary: BinaryScore = NEGATIVE_BINARY_ENTROPY,
    q: QuadratureControl = DEFAULT_QUAD,
) -> float:
    """Provisional score built from a density score and a binary score.

    ``S(f, t) = w(t) S_D(f_w, t) + w(t) S_B(p, 1) + (1 - w(t)) S_B(p, 0)``
    with ``p = int f w`` and ``f_w = f w / p``. With indicator weight on
    [0, tau), LogS and the negative binary entropy this equals
    :func:`twlog_score`.
    """
    d = _density(F)
    w = _as_weight(w)
    p = _weighted_mass(d, w, q)
    wt = float(w(t))
    if p <= 0.0:
        # f_w undefined; only the binary part can be scored
        first = math.inf if wt > 0 else 0.0
    else:
        first = _times(wt, density_score(lambda s: float(w(s)) * float(d.pdf(s)) / p, t))
    return (
        first
        + _times(wt, binary_score_from_phi(binary, min(p, 1.0), 1))
        + _times(1.0 - wt, binary_score_from_phi(binary, min(p, 1.0), 0))
    )


def censored_rule(rule: Callable, tau: float) -> Callable:
    """Wrap a rule ``S(F, t)`` as ``S_tau(F, t) = S([F]_tau, t)``."""
    if not tau > 0:
        raise DomainError("tau must be positive")

    def scored(F: PredictiveDistribution, t, *args, **kwargs):
        return rule(CensoredDist(F, tau), t, *args, **kwargs)

    scored.__name__ = f"censored_{getattr(rule, '__name__', 'rule')}"
    scored.tau = tau
    return scored
