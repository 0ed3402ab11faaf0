"""Scoring and diagnostics for time-to-event forecasts under right-censoring."""
from . import kernels
from .censoring import CensorHorizon, CensoredValue, censor_distribution, censor_scalar, censor_vector
from .discrimination import RiskDataset, auc_s, c_index
from .distributions import CensoredDist, EmpiricalDist, GammaDist, PointMass, PredictiveDistribution
from .errors import ConvergenceError, DomainError, UnsupportedDistributionError, ValidationError
from .inference import DMResult, ScoreSeries, dm_test
from .kernels import BACKEND
from .point_scoring import (
    IntervalForecast,
    QuantileForecast,
    elementary_score,
    interval_score,
    quantile_loss,
    tw_interval_score,
    tw_quantile_loss,
)
from .scoring_rules import (
    WeightFunction,
    crps,
    crps_gamma,
    lin_score,
    log_score,
    surv_crps,
    twcrps,
    twcrps_ensemble,
    twcrps_gamma,
    twlog_score,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "kernels",
    "CensorHorizon", "CensoredValue", "censor_distribution", "censor_scalar", "censor_vector",
    "RiskDataset", "auc_s", "c_index",
    "CensoredDist", "EmpiricalDist", "GammaDist", "PointMass", "PredictiveDistribution",
    "ConvergenceError", "DomainError", "UnsupportedDistributionError", "ValidationError",
    "DMResult", "ScoreSeries", "dm_test",
    "IntervalForecast", "QuantileForecast", "elementary_score", "interval_score", "quantile_loss",
    "tw_interval_score", "tw_quantile_loss",
    "WeightFunction", "crps", "crps_gamma", "lin_score", "log_score", "surv_crps", "twcrps",
    "twcrps_ensemble", "twcrps_gamma", "twlog_score",
]
