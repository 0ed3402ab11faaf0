"""Predictive distributions for event times on [0, inf).

Every variant exposes ``cdf`` (vectorized, right-continuous), a list of
``breakpoints`` where the CDF may jump or kink, and ``upper_bound``, a
point beyond which ``1 - F`` is negligible. Scoring rules only rely on
this interface, plus ``pdf`` for variants that have a density.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np
from scipy.special import gammaln

from . import kernels
from .errors import ConvergenceError, DomainError

# 1 - F below this is treated as zero when truncating integrals
TAIL_EPS = 1e-12


class PredictiveDistribution(ABC):
    """A CDF on [0, inf)."""

    has_density = False

    @abstractmethod
    def cdf(self, s):
        """F(s), elementwise; float for scalar input."""

    @abstractmethod
    def breakpoints(self) -> np.ndarray:
        """Sorted points where F may be non-smooth."""

    @abstractmethod
    def upper_bound(self) -> float:
        """A point u with 1 - F(u) < TAIL_EPS."""

    def sf(self, s):
        return 1.0 - np.asarray(self.cdf(s))


class GammaDist(PredictiveDistribution):
    """Shifted gamma ``shift + Gamma(shape, rate)``.

    Parameters may be arrays of a common broadcast shape, in which case the
    object represents a batch of distributions and every method acts
    elementwise (``cdf(s)`` broadcasts ``s`` against the batch).

    Parameters
    ----------
    shape : float or array_like
        Shape parameter alpha > 0.
    rate : float or array_like
        Rate parameter beta > 0.
    shift : float or array_like, default 0
        Left end of the support, a >= 0.
    """

    has_density = True

    def __init__(self, shape, rate, shift=0.0):
        shape, rate, shift = np.broadcast_arrays(
            np.asarray(shape, dtype=float),
            np.asarray(rate, dtype=float),
            np.asarray(shift, dtype=float),
        )
        if not np.all((shape > 0) & np.isfinite(shape)):
            raise DomainError("gamma shape must be positive and finite")
        if not np.all((rate > 0) & np.isfinite(rate)):
            raise DomainError("gamma rate must be positive and finite")
        if not np.all((shift >= 0) & np.isfinite(shift)):
            raise DomainError("gamma shift must be nonnegative and finite")
        self._shape = shape.copy()
        self._rate = rate.copy()
        self._shift = shift.copy()
        for a in (self._shape, self._rate, self._shift):
            a.flags.writeable = False

    @property
    def shape(self):
        return _scalar(self._shape)

    @property
    def rate(self):
        return _scalar(self._rate)

    @property
    def shift(self):
        return _scalar(self._shift)

    @property
    def batch_shape(self) -> tuple:
        return self._shape.shape

    def __len__(self):
        return self._shape.size

    def __getitem__(self, idx) -> "GammaDist":
        return GammaDist(self._shape[idx], self._rate[idx], self._shift[idx])

    def __repr__(self):
        if self._shape.ndim == 0:
            return f"GammaDist(shape={self.shape:g}, rate={self.rate:g}, shift={self.shift:g})"
        return f"GammaDist(batch_shape={self.batch_shape})"

    def unshifted(self) -> "GammaDist":
        return GammaDist(self._shape, self._rate, 0.0)

    def cdf(self, s):
        s = np.asarray(s, dtype=float)
        u = np.maximum(s - self._shift, 0.0) * self._rate
        return kernels.reg_lower_gamma(np.broadcast_to(self._shape, u.shape), u)

    def logpdf(self, s):
        s = np.asarray(s, dtype=float)
        shp, rate, shift = np.broadcast_arrays(self._shape, self._rate, self._shift)
        s, shp, rate, shift = np.broadcast_arrays(s, shp, rate, shift)
        u = s - shift
        out = np.full(s.shape, -np.inf)
        pos = u > 0
        up = u[pos]
        a = shp[pos]
        b = rate[pos]
        out[pos] = a * np.log(b) + (a - 1.0) * np.log(up) - b * up - gammaln(a)
        at0 = u == 0
        # density at the support boundary: inf, beta, or 0
        out[at0 & (shp < 1)] = np.inf
        out[at0 & (shp == 1)] = np.log(rate[at0 & (shp == 1)])
        return _scalar(out)

    def pdf(self, s):
        return _scalar(np.exp(np.asarray(self.logpdf(s))))

    def mean(self):
        return _scalar(self._shift + self._shape / self._rate)

    def quantile(self, p):
        return gamma_quantile(self, p)

    def sample(self, rng: np.random.Generator, n: int):
        return gamma_sample(self, rng, n)

    def breakpoints(self) -> np.ndarray:
        return np.unique(self._shift.ravel())

    def upper_bound(self) -> float:
        return float(np.max(gamma_quantile(self, 1.0 - TAIL_EPS)))


class EmpiricalDist(PredictiveDistribution):
    """Step CDF of an ensemble: ``F(s) = #{members <= s} / m``."""

    def __init__(self, members):
        m = np.sort(np.asarray(members, dtype=float).ravel())
        if m.size < 1:
            raise DomainError("an empirical distribution needs at least one member")
        if not np.all(np.isfinite(m)):
            raise DomainError("ensemble members must be finite")
        m.flags.writeable = False
        self._members = m

    @property
    def members(self) -> np.ndarray:
        return self._members

    @property
    def m(self) -> int:
        return self._members.size

    def __repr__(self):
        return f"EmpiricalDist(m={self.m})"

    def cdf(self, s):
        s = np.asarray(s, dtype=float)
        out = np.searchsorted(self._members, s, side="right") / self.m
        return _scalar(np.asarray(out, dtype=float))

    def mean(self):
        return float(self._members.mean())

    def breakpoints(self) -> np.ndarray:
        return np.unique(self._members)

    def upper_bound(self) -> float:
        return float(self._members[-1])


class PointMass(PredictiveDistribution):
    """Degenerate distribution at ``location``."""

    def __init__(self, location: float):
        location = float(location)
        if not math.isfinite(location):
            raise DomainError("point mass location must be finite")
        self.location = location

    def __repr__(self):
        return f"PointMass({self.location:g})"

    def cdf(self, s):
        return _scalar(np.asarray(np.asarray(s, dtype=float) >= self.location, dtype=float))

    def mean(self):
        return self.location

    def breakpoints(self) -> np.ndarray:
        return np.array([self.location])

    def upper_bound(self) -> float:
        return self.location


class CensoredDist(PredictiveDistribution):
    """``[F]_tau``: equal to F below tau and to 1 from tau on."""

    def __init__(self, base: PredictiveDistribution, tau: float):
        tau = float(tau)
        if not tau > 0:
            raise DomainError(f"censoring time must be positive, got {tau}")
        # [[F]_t1]_t2 = [F]_min(t1, t2)
        if isinstance(base, CensoredDist):
            tau = min(tau, base.tau)
            base = base.base
        self.base = base
        self.tau = tau

    def __repr__(self):
        return f"CensoredDist({self.base!r}, tau={self.tau:g})"

    def cdf(self, s):
        s = np.asarray(s, dtype=float)
        out = np.where(s < self.tau, self.base.cdf(s), 1.0)
        return _scalar(np.asarray(out, dtype=float))

    def breakpoints(self) -> np.ndarray:
        b = self.base.breakpoints()
        return np.append(b[b < self.tau], self.tau)

    def upper_bound(self) -> float:
        return min(self.tau, self.base.upper_bound())


def _scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


def gamma_cdf(d: GammaDist, x):
    """CDF of a shifted gamma: 0 below the shift, P(alpha, beta (x - a)) above."""
    return d.cdf(x)


def gamma_quantile(d: GammaDist, p, tol: float = 1e-10, max_iter: int = 200):
    """Inverse CDF by safeguarded Newton iteration inside a bisection bracket.

    Parameters
    ----------
    d : GammaDist
    p : float or array_like
        Probabilities in (0, 1); broadcast against the batch of ``d``.
    tol : float
        Absolute tolerance on the CDF value.

    Returns
    -------
    float or ndarray
    """
    p = np.asarray(p, dtype=float)
    if not np.all((p > 0) & (p < 1)):
        raise DomainError("gamma_quantile requires 0 < p < 1")
    alpha, beta, shift, p = np.broadcast_arrays(d._shape, d._rate, d._shift, p)
    alpha = alpha.ravel()
    p = p.ravel()
    # work on the standard gamma, y = beta (x - a)
    lo = np.zeros_like(p)
    hi = np.maximum(alpha, 1.0)
    while True:
        short = kernels.reg_lower_gamma(alpha, hi) < p
        if not short.any():
            break
        hi[short] *= 2.0
    # Wilson-Hilferty start, clipped into the bracket
    z = _norm_ppf(p)
    c = 1.0 / (9.0 * alpha)
    y = alpha * np.maximum(1.0 - c + z * np.sqrt(c), 1e-3) ** 3
    y = np.clip(y, lo, hi)
    lg = gammaln(alpha)
    for _ in range(max_iter):
        f = kernels.reg_lower_gamma(alpha, y) - p
        if np.all(np.abs(f) <= tol):
            break
        lo = np.where(f < 0, y, lo)
        hi = np.where(f > 0, y, hi)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            dens = np.exp((alpha - 1.0) * np.log(y) - y - lg)
            step = y - f / dens
        inside = np.isfinite(step) & (step > lo) & (step < hi)
        y = np.where(inside, step, 0.5 * (lo + hi))
    else:
        f = kernels.reg_lower_gamma(alpha, y) - p
        if not np.all((np.abs(f) <= tol) | (hi - lo <= 4 * np.finfo(float).eps * hi)):
            raise ConvergenceError("gamma_quantile did not converge")
    x = shift.ravel() + y / beta.ravel()
    return _scalar(x.reshape(shift.shape))


def _norm_ppf(p):
    # only a starting value for Newton; accuracy is not critical
    from scipy.special import ndtri
    return ndtri(p)


def gamma_sample(d: GammaDist, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` draws from a scalar shifted gamma using the supplied generator."""
    if n < 1:
        raise DomainError("sample size must be at least 1")
    if d.batch_shape != ():
        raise DomainError("gamma_sample needs a scalar GammaDist")
    return d.shift + rng.gamma(d.shape, 1.0 / d.rate, size=n)


def empirical_cdf(e: EmpiricalDist, s):
    """Fraction of members <= s."""
    return e.cdf(s)
