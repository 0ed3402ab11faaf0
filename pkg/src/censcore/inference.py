"""Diebold-Mariano test of equal predictive accuracy.

The long-run variance of the score differential uses empirical
autocovariances with rectangular truncation at lag L:
``sigma^2 = gamma_0 + 2 sum_{k=1}^{L} gamma_k``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DomainError, ValidationError

MIN_LENGTH = 10


@dataclass(frozen=True)
class ScoreSeries:
    """Per-case scores in case order. Non-finite scores are kept but
    excluded from statistics; ``n_excluded`` reports how many."""

    scores: np.ndarray
    label: str = ""

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float).ravel()
        if np.any(np.isnan(s)):
            raise ValidationError(f"series {self.label!r} contains NaN scores")
        s.flags.writeable = False
        object.__setattr__(self, "scores", s)

    def __len__(self):
        return self.scores.size

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.scores)

    @property
    def n_excluded(self) -> int:
        return int(self.scores.size - np.count_nonzero(self.finite))

    def mean(self) -> float:
        f = self.scores[self.finite]
        if f.size == 0:
            raise ValidationError(f"series {self.label!r} has no finite scores")
        return float(f.mean())

    def diff(self, other: "ScoreSeries") -> np.ndarray:
        """Differential ``self - other`` over cases finite in both."""
        if len(self) != len(other):
            raise ValidationError(f"series lengths differ: {len(self)} vs {len(other)}")
        keep = self.finite & other.finite
        return self.scores[keep] - other.scores[keep]


@dataclass(frozen=True)
class DMResult:
    statistic: float
    p_value: float
    lag: int
    n: int
    mean_diff: float
    variance: float
    sided: str
    excluded: int = 0

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "lag": self.lag,
            "n": self.n,
            "mean_diff": self.mean_diff,
            "variance": self.variance,
            "sided": self.sided,
            "excluded": self.excluded,
        }


def auto_lag(n: int) -> int:
    """Default truncation lag ceil(n^(1/3)), the least L with L^3 >= n."""
    lag = max(0, round(n ** (1.0 / 3.0)))
    while lag ** 3 < n:
        lag += 1
    while lag > 0 and (lag - 1) ** 3 >= n:
        lag -= 1
    return lag


def long_run_variance(d: np.ndarray, lag: int) -> float:
    """gamma_0 + 2 sum_{k<=lag} gamma_k with 1/n-normalized autocovariances."""
    n = d.size
    e = d - d.mean()
    var = float(e @ e) / n
    for k in range(1, min(lag, n - 1) + 1):
        var += 2.0 * float(e[k:] @ e[:-k]) / n
    return var


def dm_test(a, b, lag: int | str | None = "auto", sided: str = "one") -> DMResult:
    """Diebold-Mariano test on ``d = a - b``.

    Parameters
    ----------
    a, b : ScoreSeries or array_like
        Aligned per-case scores (lower is better).
    lag : int, "auto" or None
        Truncation lag; "auto"/None uses ceil(n^(1/3)).
    sided : {"one", "two"}
        ``"one"`` tests against the alternative E[d] > 0, i.e. that ``b``
        scores better than ``a``.

    Returns
    -------
    DMResult
    """
    a = a if isinstance(a, ScoreSeries) else ScoreSeries(a, "a")
    b = b if isinstance(b, ScoreSeries) else ScoreSeries(b, "b")
    if sided not in ("one", "two"):
        raise DomainError(f"sided must be 'one' or 'two', got {sided!r}")
    d = a.diff(b)
    excluded = len(a) - d.size
    n = d.size
    if n < MIN_LENGTH:
        raise ValidationError(f"need at least {MIN_LENGTH} aligned finite scores, got {n}")
    if lag in ("auto", None):
        L = auto_lag(n)
    else:
        L = int(lag)
        if L < 0:
            raise DomainError("lag must be nonnegative")
    mean = float(d.mean())
    if not np.any(d):
        return DMResult(0.0, 1.0, L, n, 0.0, 0.0, sided, excluded)
    var = long_run_variance(d, L)
    if var <= 0 and L > 0:
        warnings.warn(
            f"long-run variance estimate {var:.3g} <= 0 at lag {L}; falling back to lag 0",
            RuntimeWarning,
            stacklevel=2,
        )
        L = 0
        var = long_run_variance(d, 0)
    if var <= 0:
        # constant nonzero differential: infinitely strong evidence
        stat = math.copysign(math.inf, mean)
    else:
        stat = mean / math.sqrt(var / n)
    if sided == "one":
        p = float(norm.sf(stat))
    else:
        p = float(min(1.0, 2.0 * norm.sf(abs(stat))))
    return DMResult(float(stat), p, L, n, mean, var, sided, excluded)
