"""Five-forecaster gamma experiment.

Each case draws ``x ~ Gamma(3,1)``, ``y ~ Gamma(2,1)``, ``z ~ Gamma(1,1)``
and realizes ``t = x + y + z`` (marginally Gamma(6,1)). Forecasters
differ in information (none, ``x``, ``x + y``) or in the rate they assume
for ``z``. The ideal ranking is: ModInfoMuli beats LowInfoLucy, and
HighInfoHannah beats everyone.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .diagnostics import Curve, QuantilePairs, brier_curve, murphy_curve
from .discrimination import RiskDataset, auc_s, c_index
from .distributions import GammaDist
from .errors import DomainError
from .inference import dm_test
from .point_scoring import interval_score, quantile_loss, tw_interval_score, tw_quantile_loss
from .scoring_rules import crps_gamma, lin_score, log_score, surv_crps_gamma, twcrps_gamma, twlog_score

DEFAULT_N = 10_000
DEFAULT_SEED = 20240917
DEFAULT_TAUS = (6.0, 12.0)

# the example case used for the functional table
EXAMPLE_X = 2.45
EXAMPLE_Y = 1.34


@dataclass(frozen=True)
class ExperimentCase:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (self.x > 0 and self.y > 0 and self.z > 0):
            raise DomainError("component times must be positive")

    @property
    def t(self) -> float:
        return self.x + self.y + self.z


@dataclass(frozen=True)
class Experiment:
    """Column store of ``n`` cases; indexing yields :class:`ExperimentCase`."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float).ravel() for a in (self.x, self.y, self.z)]
        if len({a.size for a in arrs}) != 1:
            raise DomainError("component arrays differ in length")
        for name, a in zip("xyz", arrs):
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        t = arrs[0] + arrs[1] + arrs[2]
        t.flags.writeable = False
        object.__setattr__(self, "t", t)

    def __len__(self):
        return self.x.size

    def __getitem__(self, i) -> ExperimentCase:
        return ExperimentCase(float(self.x[i]), float(self.y[i]), float(self.z[i]))

    def __iter__(self) -> Iterator[ExperimentCase]:
        for i in range(len(self)):
            yield self[i]


def generate_experiment(n: int = DEFAULT_N, seed: int = DEFAULT_SEED) -> Experiment:
    """Draw ``n`` independent cases from one seeded generator stream."""
    if n < 1:
        raise DomainError("n must be at least 1")
    rng = np.random.default_rng(seed)
    x = rng.gamma(3.0, 1.0, n)
    y = rng.gamma(2.0, 1.0, n)
    z = rng.gamma(1.0, 1.0, n)
    return Experiment(x, y, z, seed)


@dataclass(frozen=True)
class ForecasterSpec:
    """Forecast ``shift + Gamma(shape, rate)`` with shift the sum of the
    known components."""

    name: str
    shape: float
    rate: float
    knows: tuple[str, ...] = ()

    def shift(self, case) -> float | np.ndarray:
        s = 0.0
        for c in self.knows:
            s = s + getattr(case, c)
        return s

    @property
    def base(self) -> GammaDist:
        return GammaDist(self.shape, self.rate)


FORECASTERS: tuple[ForecasterSpec, ...] = (
    ForecasterSpec("LowInfoLucy", 6.0, 1.0),
    ForecasterSpec("ModInfoMuli", 3.0, 1.0, ("x",)),
    ForecasterSpec("HighInfoHannah", 1.0, 1.0, ("x", "y")),
    ForecasterSpec("PessimisticPenny", 1.0, 2.0, ("x", "y")),
    ForecasterSpec("OptimisticOmar", 1.0, 1.0 / 3.0, ("x", "y")),
)
NAMES = tuple(f.name for f in FORECASTERS)

# Z-only forecasts used for the twLogS comparison
Z_FORECASTERS: tuple[ForecasterSpec, ...] = (
    ForecasterSpec("HighInfoHannah", 1.0, 1.0),
    ForecasterSpec("PessimisticPenny", 1.0, 2.0),
    ForecasterSpec("OptimisticOmar", 1.0, 1.0 / 3.0),
)


def get_forecaster(name: str) -> ForecasterSpec:
    for f in FORECASTERS:
        if f.name == name:
            return f
    raise DomainError(f"unknown forecaster {name!r}; choose from {', '.join(NAMES)}")


def forecaster_distribution(spec: ForecasterSpec | str, case) -> GammaDist:
    """Forecast for one case, or a batch for an :class:`Experiment`."""
    if isinstance(spec, str):
        spec = get_forecaster(spec)
    shift = spec.shift(case)
    if isinstance(case, Experiment):
        shift = np.broadcast_to(np.asarray(shift, dtype=float), (len(case),))
    return GammaDist(spec.shape, spec.rate, shift)


def forecaster_quantile(spec: ForecasterSpec, case, p: float):
    """Quantile of a forecaster's distribution. The base law does not vary
    by case, so one inversion serves the whole experiment."""
    q = float(spec.base.quantile(p))
    return np.asarray(spec.shift(case), dtype=float) + q if spec.knows else (
        np.full(len(case), q) if isinstance(case, Experiment) else q
    )


# ---------------------------------------------------------------- tables

@dataclass
class Table:
    """Mean scores (rows) by forecaster (columns)."""

    name: str
    columns: tuple[str, ...]
    rows: dict[str, np.ndarray] = field(default_factory=dict)
    # row -> matrix P with P[i, j] the one-sided p-value that column i
    # scores better than column j
    pvalues: dict[str, np.ndarray] = field(default_factory=dict)
    orientation: str = "negative"

    def add(self, row: str, values, scores: Sequence[np.ndarray] | None = None, lag="auto"):
        self.rows[row] = np.asarray(values, dtype=float)
        if scores is not None:
            k = len(scores)
            P = np.full((k, k), np.nan)
            for i in range(k):
                for j in range(k):
                    if i != j:
                        P[i, j] = dm_test(scores[j], scores[i], lag=lag, sided="one").p_value
            self.pvalues[row] = P

    def value(self, row: str, column: str) -> float:
        return float(self.rows[row][self.columns.index(column)])

    def ranking(self, row: str) -> list[str]:
        v = self.rows[row]
        order = np.argsort(v if self.orientation == "negative" else -v, kind="stable")
        return [self.columns[i] for i in order]


@dataclass
class TableBundle:
    n: int
    seed: int | None
    taus: tuple[float, ...]
    tables: dict[str, Table] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def __getitem__(self, name: str) -> Table:
        return self.tables[name]

    def to_dict(self) -> dict:
        out = {"n": self.n, "seed": self.seed, "taus": list(self.taus), "notes": list(self.notes), "tables": {}}
        for name, tab in self.tables.items():
            out["tables"][name] = {
                "columns": list(tab.columns),
                "orientation": tab.orientation,
                "rows": {r: [float(v) for v in vals] for r, vals in tab.rows.items()},
                "pvalues": {
                    r: [[None if math.isnan(v) else float(v) for v in row] for row in P]
                    for r, P in tab.pvalues.items()
                },
            }
        return out

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, allow_nan=True)

    def to_csv(self, dest=None) -> str:
        """Long-format CSV ``table,row,forecaster,value``; returns the text."""
        from .diagnostics import fmt

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["table", "row", "forecaster", "value"])
        for name, tab in self.tables.items():
            for r, vals in tab.rows.items():
                for c, v in zip(tab.columns, vals):
                    w.writerow([name, r, c, fmt(v)])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text

    def pvalues_to_csv(self, dest=None) -> str:
        """CSV ``table,row,better,worse,p_value`` of one-sided DM p-values."""
        from .diagnostics import fmt

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["table", "row", "better", "worse", "p_value"])
        for name, tab in self.tables.items():
            for r, P in tab.pvalues.items():
                for i, a in enumerate(tab.columns):
                    for j, b in enumerate(tab.columns):
                        if i != j:
                            w.writerow([name, r, a, b, fmt(P[i, j])])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text


def _fmt_tau(tau: float) -> str:
    return f"{tau:g}"


def run_experiment_tables(
    n: int = DEFAULT_N,
    seed: int = DEFAULT_SEED,
    taus: Sequence[float] = DEFAULT_TAUS,
    experiment: Experiment | None = None,
    pvalues: bool = True,
    restrict_t: float = 4.0,
    surv_tau: float = 2.0,
    twlogs_tau: float = 2.0,
) -> TableBundle:
    """Mean scores of the five forecasters for every scoring method.

    Tables (keys of the returned bundle):

    ``scoring_rules``
        CRPS, LogS, LinS.
    ``discrimination``
        c-index and AUC_s at s = 2 and 10 (higher is better).
    ``functionals``
        Mean, median, 0.1-quantile and IQR for the example case.
    ``scoring_functions``
        Squared and absolute error of the mean, absolute error of the
        median, QL_0.9 of the 0.9-quantile, IS_0.5 of the IQR.
    ``provisional``
        CRPS over cases with t <= ``restrict_t``, survCRPS, and twCRPS,
        twQL_0.9, twIS_0.5 for each tau.
    ``twlogs_z``
        twLogS of Z-only forecasts at ``twlogs_tau``.
    """
    exp = experiment if experiment is not None else generate_experiment(n, seed)
    taus = tuple(float(t) for t in taus)
    bundle = TableBundle(len(exp), exp.seed, taus)
    t = exp.t
    dists = [forecaster_distribution(f, exp) for f in FORECASTERS]

    def q(level):
        return [forecaster_quantile(f, exp, level) for f in FORECASTERS]

    def add(tab, row, per_case):
        tab.add(row, [float(np.mean(s)) for s in per_case], per_case if pvalues else None)

    # scoring rules
    tab = Table("scoring_rules", NAMES)
    add(tab, "CRPS", [crps_gamma(d, t) for d in dists])
    logs = [np.asarray(log_score(d, t)) for d in dists]
    for name, s in zip(NAMES, logs):
        bad = int(np.count_nonzero(~np.isfinite(s)))
        if bad:
            bundle.notes.append(f"LogS: {bad} infinite scores for {name}")
    add(tab, "LogS", logs)
    add(tab, "LinS", [lin_score(d, t) for d in dists])
    bundle.tables[tab.name] = tab

    # discrimination
    tab = Table("discrimination", NAMES, orientation="positive")
    for s in (2.0, 10.0):
        risks = [np.asarray(d.cdf(s)) for d in dists]
        tab.add(f"c-index (s={s:g})", [c_index(RiskDataset(p, t, s)) for p in risks])
    for s in (2.0, 10.0):
        risks = [np.asarray(d.cdf(s)) for d in dists]
        tab.add(f"AUC_s (s={s:g})", [auc_s(RiskDataset(p, t, s)) for p in risks])
    bundle.tables[tab.name] = tab

    # functionals for the example case
    case = ExperimentCase(EXAMPLE_X, EXAMPLE_Y, 1.0)
    tab = Table("functionals", NAMES, orientation="none")
    tab.add("mean", [f.shift(case) + f.shape / f.rate for f in FORECASTERS])
    for label, lev in (("median", 0.5), ("0.1-quantile", 0.1), ("IQR lower", 0.25), ("IQR upper", 0.75)):
        tab.add(label, [forecaster_quantile(f, case, lev) for f in FORECASTERS])
    bundle.tables[tab.name] = tab

    # scoring functions on functionals
    means = [np.asarray(d.mean()) for d in dists]
    medians = q(0.5)
    q90 = q(0.9)
    q25, q75 = q(0.25), q(0.75)
    tab = Table("scoring_functions", NAMES)
    add(tab, "squared error (mean)", [(m - t) ** 2 for m in means])
    add(tab, "absolute error (mean)", [np.abs(m - t) for m in means])
    add(tab, "absolute error (median)", [np.abs(m - t) for m in medians])
    add(tab, "QL_0.9 (0.9-quantile)", [quantile_loss(0.9, x, t) for x in q90])
    add(tab, "IS_0.5 (IQR)", [interval_score(0.5, (lo, hi), t) for lo, hi in zip(q25, q75)])
    bundle.tables[tab.name] = tab

    # provisional evaluation
    tab = Table("provisional", NAMES)
    sub = t <= restrict_t
    add(tab, f"CRPS if t<={restrict_t:g}", [crps_gamma(d[sub], t[sub]) for d in dists])
    add(tab, f"survCRPS_{surv_tau:g}", [surv_crps_gamma(d, t, surv_tau) for d in dists])
    for tau in taus:
        add(tab, f"twCRPS_{_fmt_tau(tau)}", [twcrps_gamma(d, t, tau) for d in dists])
    for tau in taus:
        add(tab, f"twQL_0.9,{_fmt_tau(tau)}", [tw_quantile_loss(0.9, tau, x, t) for x in q90])
    for tau in taus:
        add(tab, f"twIS_0.5,{_fmt_tau(tau)}",
            [tw_interval_score(0.5, tau, (lo, hi), t) for lo, hi in zip(q25, q75)])
    bundle.tables[tab.name] = tab

    # twLogS on Z
    zn = tuple(f.name for f in Z_FORECASTERS)
    tab = Table("twlogs_z", zn)
    add(tab, f"twLogS_{twlogs_tau:g}", [twlog_score(f.base, exp.z, twlogs_tau) for f in Z_FORECASTERS])
    bundle.tables[tab.name] = tab
    return bundle


# ---------------------------------------------------------------- figure curves

def brier_curves(exp: Experiment, grid=None) -> list[Curve]:
    """Mean Brier score curves for each forecaster."""
    if grid is None:
        grid = np.linspace(0.0, 12.0, 241)
    return [brier_curve(forecaster_distribution(f, exp), exp.t, grid, f.name) for f in FORECASTERS]


def murphy_curves(exp: Experiment, alpha: float = 0.9, grid=None) -> list[Curve]:
    """Murphy curves of each forecaster's ``alpha``-quantile forecasts."""
    if grid is None:
        grid = np.linspace(0.0, 12.0, 241)
    return [
        murphy_curve(QuantilePairs(forecaster_quantile(f, exp, alpha), exp.t, alpha), grid, f.name)
        for f in FORECASTERS
    ]
