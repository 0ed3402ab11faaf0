"""Right-censoring operators ``[.]_tau``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .distributions import CensoredDist, PredictiveDistribution
from .errors import DomainError


@dataclass(frozen=True)
class CensorHorizon:
    """Evaluation time tau > 0 at which realizations are censored."""

    tau: float

    def __post_init__(self):
        if not (self.tau > 0 and np.isfinite(self.tau)):
            raise DomainError(f"tau must be positive and finite, got {self.tau}")


class CensoredValue(NamedTuple):
    """A censored time with a reporting flag; scoring ignores the flag."""

    value: float
    censored: bool


def _tau(h) -> float:
    return h.tau if isinstance(h, CensorHorizon) else float(h)


def censor_scalar(h: CensorHorizon | float, t: float) -> float:
    """min(t, tau)."""
    return min(float(t), _tau(h))


def censor_vector(h: CensorHorizon | float, x):
    """Componentwise min(x_i, tau); returns an ndarray of the input shape."""
    return np.minimum(np.asarray(x, dtype=float), _tau(h))


def censor_distribution(h: CensorHorizon | float, F: PredictiveDistribution) -> CensoredDist:
    """[F]_tau. Censoring an already censored distribution is idempotent."""
    return CensoredDist(F, _tau(h))


def censor_with_flag(h: CensorHorizon | float, t: float) -> CensoredValue:
    """Censor and record whether censoring changed the value (t > tau)."""
    tau = _tau(h)
    return CensoredValue(min(float(t), tau), bool(t > tau))
