"""Scoring functions for quantile, point and interval forecasts.

All functions broadcast over numpy arrays and return a float for scalar
input. ``tw_*`` variants score right-censored arguments ``[.]_tau``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError


@dataclass(frozen=True)
class QuantileForecast:
    """An ``level``-quantile forecast ``value``."""

    level: float
    value: float

    def __post_init__(self):
        _check_level(self.level)
        if not self.value >= 0:
            raise DomainError("quantile forecast must be nonnegative")


@dataclass(frozen=True)
class IntervalForecast:
    """Central (1 - alpha) prediction interval (lower, upper)."""

    lower: float
    upper: float
    alpha: float = 0.5

    def __post_init__(self):
        _check_level(self.alpha)
        if not self.lower <= self.upper:
            raise DomainError(f"interval lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def coverage(self) -> float:
        return 1.0 - self.alpha


def _check_level(alpha):
    a = np.asarray(alpha, dtype=float)
    if not np.all((a > 0) & (a < 1)):
        raise DomainError(f"level must lie in (0, 1), got {alpha}")


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _bounds(iv):
    if isinstance(iv, IntervalForecast):
        lo, hi = iv.lower, iv.upper
    else:
        lo, hi = iv
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise DomainError("interval lower bound exceeds upper bound")
    return lo, hi


def quantile_loss(alpha, x, t):
    """QL_alpha(x, t) = (1{x >= t} - alpha)(x - t)."""
    _check_level(alpha)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return _out(((x >= t) - np.asarray(alpha, dtype=float)) * (x - t))


def g_quantile_score(alpha, g: Callable, x, t):
    """(1{x >= t} - alpha)(g(x) - g(t)) for strictly increasing ``g``."""
    _check_level(alpha)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        diff = np.asarray(g(x), dtype=float) - np.asarray(g(t), dtype=float)
    # g(x) = g(t) when x = t, even where g is infinite
    diff = np.where(x == t, 0.0, diff)
    return _out(((x >= t) - np.asarray(alpha, dtype=float)) * diff)


def tw_quantile_loss(alpha, tau, x, t):
    """Threshold-weighted quantile loss: QL_alpha([x]_tau, [t]_tau)."""
    return quantile_loss(alpha, np.minimum(x, tau), np.minimum(t, tau))


def tw_g_quantile_score(alpha, tau, g: Callable, x, t):
    """g-quantile score of censored arguments."""
    return g_quantile_score(alpha, g, np.minimum(x, tau), np.minimum(t, tau))


def interval_score(alpha, iv, t):
    """IS_alpha((x1, x2), t) = QL_{alpha/2}(x1, t) + QL_{1-alpha/2}(x2, t).

    Equivalently ``(alpha/2)(x2 - x1) + 1{t < x1}(x1 - t) + 1{t > x2}(t - x2)``.
    ``iv`` is an :class:`IntervalForecast` or a pair of arrays.
    """
    _check_level(alpha)
    lo, hi = _bounds(iv)
    t = np.asarray(t, dtype=float)
    a = float(alpha)
    width = 0.5 * a * (hi - lo)
    over = np.where(t < lo, lo - t, 0.0)
    under = np.where(t > hi, t - hi, 0.0)
    return _out(width + over + under)


def tw_interval_score(alpha, tau, iv, t):
    """Threshold-weighted interval score: IS_alpha of censored arguments."""
    lo, hi = _bounds(iv)
    return interval_score(alpha, (np.minimum(lo, tau), np.minimum(hi, tau)), np.minimum(t, tau))


def elementary_score(alpha, theta, x, t):
    """Elementary quantile score at decision threshold ``theta``.

    ``1 - alpha`` if ``t <= theta < x``; ``alpha`` if ``x <= theta < t``;
    0 otherwise.
    """
    _check_level(alpha)
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    a = np.asarray(alpha, dtype=float)
    false_alarm = (t <= theta) & (theta < x)
    miss = (x <= theta) & (theta < t)
    return _out(np.where(false_alarm, 1.0 - a, np.where(miss, a, 0.0)))


@dataclass(frozen=True)
class MeanCounterexample:
    """Two laws whose censored CDFs agree on [0, tau) but whose means differ.

    ``F1`` is uniform on [0, a]. ``F2`` has density 1/a on [0, tau] and
    ``(2/a)(1 - (s - tau)/(a - tau))`` on (tau, a], for tau < a < 2 tau.
    """

    tau: float
    a: float

    def __post_init__(self):
        if not (0 < self.tau < self.a < 2 * self.tau):
            raise DomainError("need 0 < tau < a < 2 tau")

    def pdf1(self, s):
        s = np.asarray(s, dtype=float)
        return _out(np.where((s >= 0) & (s <= self.a), 1.0 / self.a, 0.0))

    def pdf2(self, s):
        s = np.asarray(s, dtype=float)
        tau, a = self.tau, self.a
        tail = 2.0 / a * (1.0 - (s - tau) / (a - tau))
        return _out(np.where((s >= 0) & (s <= tau), 1.0 / a, np.where((s > tau) & (s <= a), tail, 0.0)))

    def cdf1(self, s):
        s = np.asarray(s, dtype=float)
        return _out(np.clip(s / self.a, 0.0, 1.0))

    def cdf2(self, s):
        s = np.asarray(s, dtype=float)
        tau, a = self.tau, self.a
        d = a - tau
        u = np.clip(s - tau, 0.0, d)
        upper = tau / a + 2.0 / a * (u - u * u / (2.0 * d))
        return _out(np.where(s < 0, 0.0, np.where(s <= tau, s / a, np.minimum(upper, 1.0))))

    def censored_cdf1(self, s):
        s = np.asarray(s, dtype=float)
        return _out(np.where(s < self.tau, self.cdf1(s), 1.0))

    def censored_cdf2(self, s):
        s = np.asarray(s, dtype=float)
        return _out(np.where(s < self.tau, self.cdf2(s), 1.0))

    @property
    def mean1(self) -> float:
        return self.a / 2.0

    @property
    def mean2(self) -> float:
        tau, a = self.tau, self.a
        d = a - tau
        return (tau * tau / 2.0 + tau * d + d * d / 3.0) / a

    def mean2_quadrature(self) -> float:
        head, _ = integrate.quad(lambda s: s / self.a, 0.0, self.tau)
        tail, _ = integrate.quad(lambda s: s * float(self.pdf2(s)), self.tau, self.a)
        return head + tail


def mean_counterexample(tau: float, a: float) -> MeanCounterexample:
    """Build the pair of laws showing the mean is not provisionally elicitable."""
    return MeanCounterexample(float(tau), float(a))


def expected_tw_quantile_loss(alpha: float, tau: float, x: float, cdf: Callable, pdf: Callable) -> float:
    """E_F twQL(alpha, tau, x, [T]_tau) for a continuous F, by quadrature."""
    xc = min(x, tau)
    inner, _ = integrate.quad(
        lambda s: float(quantile_loss(alpha, xc, s)) * pdf(s), 0.0, tau,
        points=[xc] if 0 < xc < tau else None, limit=200,
    )
    return inner + float(quantile_loss(alpha, xc, tau)) * (1.0 - cdf(tau))


__all__ = [
    "QuantileForecast", "IntervalForecast", "quantile_loss", "g_quantile_score",
    "tw_quantile_loss", "tw_g_quantile_score", "interval_score", "tw_interval_score",
    "elementary_score", "MeanCounterexample", "mean_counterexample",
    "expected_tw_quantile_loss",
]
