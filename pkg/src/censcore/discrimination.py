"""Discrimination indices for predicted risks: c-index and AUC_s.

Both are rank statistics with half credit for tied risks. Neither is a
proper scoring method; they are kept as baselines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class RiskDataset:
    """Predicted risks ``p_i = P(T_i <= s)`` with realized times ``t_i``.

    Parameters
    ----------
    p, t : array_like
        Equal-length risks in [0, 1] and nonnegative event times.
    s : float
        Risk horizon.
    tau : float, default inf
        Censoring time; the c-index only counts pairs whose earlier time
        does not exceed it.
    """

    p: np.ndarray
    t: np.ndarray
    s: float
    tau: float = math.inf

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        t = np.asarray(self.t, dtype=float).ravel()
        if p.shape != t.shape:
            raise ValidationError(f"{p.size} risks but {t.size} times")
        if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
            raise DomainError("risks must lie in [0, 1]")
        if np.any(np.isnan(t)) or np.any(t < 0):
            raise DomainError("event times must be nonnegative")
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "tau", float(self.tau))

    def __len__(self):
        return self.p.size


def concordance(d: RiskDataset) -> tuple[float, float]:
    """Numerator and denominator of the c-index."""
    return kernels.concordance_counts(d.p, d.t, d.tau)


def c_index(d: RiskDataset) -> float:
    """Empirical concordance index over ordered pairs (i, j).

    Counts pairs with ``t_i < t_j`` and ``t_i <= tau``; the pair is
    concordant when ``p_i > p_j`` and scores 1/2 on a tie.
    """
    num, den = concordance(d)
    if den <= 0:
        raise ValidationError("c-index undefined: no comparable pairs")
    return num / den


def auc_s(d: RiskDataset) -> float:
    """Empirical time-dependent AUC at horizon ``d.s``.

    Mann-Whitney statistic between cases with ``t <= s`` and ``t > s``.
    """
    pos = d.p[d.t <= d.s]
    neg = np.sort(d.p[d.t > d.s])
    den = float(pos.size) * float(neg.size)
    if den == 0:
        raise ValidationError("AUC_s undefined: need events on both sides of s")
    below = np.searchsorted(neg, pos, side="left")
    ties = np.searchsorted(neg, pos, side="right") - below
    # integer sums are exact, so the result does not depend on ordering
    num2 = 2 * int(below.sum()) + int(ties.sum())
    return num2 / (2.0 * den)
