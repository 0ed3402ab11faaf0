"""CSV ingestion, first-passage extraction and dataset scoring.

File formats (exact headers)::

    records   case_id,group,kind,payload,realization,censored
    ensemble  case_id,member,lead_time,value
    curves    abscissa,value,label
    scores    case_id,group,score

Record payloads are ``;``-separated numbers whose meaning depends on
``kind``: ``ensemble`` (member event times), ``gamma`` (shape;rate;shift),
``point`` (x), ``quantile`` (x), ``interval`` (lower;upper) and ``risk``
(probability). ``censored=1`` marks a realization known only to exceed
every scoring horizon; its stored value is a dummy larger than tau.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .diagnostics import fmt
from .discrimination import RiskDataset, auc_s, c_index
from .distributions import CensoredDist, EmpiricalDist, GammaDist, PointMass
from .errors import (
    ConvergenceError,
    DomainError,
    UnsupportedDistributionError,
    ValidationError,
)
from .inference import ScoreSeries
from .point_scoring import tw_interval_score, tw_quantile_loss
from .scoring_rules import (
    crps,
    crps_gamma,
    lin_score,
    surv_crps,
    surv_crps_gamma,
    twcrps,
    twcrps_ensemble,
    twcrps_gamma,
    twlog_score,
)

RECORD_HEADER = ["case_id", "group", "kind", "payload", "realization", "censored"]
ENSEMBLE_HEADER = ["case_id", "member", "lead_time", "value"]
SCORE_HEADER = ["case_id", "group", "score"]
GROUP_HEADER = ["group", "mean_score", "count"]

RECORD_KINDS = ("ensemble", "gamma", "point", "quantile", "interval", "risk")
PAYLOAD_ARITY = {"gamma": 3, "point": 1, "quantile": 1, "interval": 2, "risk": 1}

# stand-in event time for "did not happen within the horizon"
DUMMY_TIME = 1000.0


# ---------------------------------------------------------------- first passage

@dataclass(frozen=True)
class TimeSeriesForecast:
    """One member's time series: strictly increasing lead times."""

    case_id: str
    member: str
    lead_times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lt = np.asarray(self.lead_times, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if lt.size == 0 or lt.shape != v.shape:
            raise ValidationError(f"{self.case_id}/{self.member}: need matching, nonempty samples")
        if np.any(np.diff(lt) <= 0):
            raise ValidationError(f"{self.case_id}/{self.member}: lead times must be strictly increasing")
        if not (np.all(np.isfinite(lt)) and np.all(np.isfinite(v))):
            raise ValidationError(f"{self.case_id}/{self.member}: non-finite sample")
        object.__setattr__(self, "lead_times", lt)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class EventSpec:
    """Event 'value reaches ``threshold``', observed up to ``horizon``."""

    threshold: float
    horizon: float
    direction: str = "up"

    def __post_init__(self):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise DomainError("horizon must be positive and finite")
        if self.direction != "up":
            raise DomainError("only upward crossings are supported")
        if not math.isfinite(self.threshold):
            raise DomainError("threshold must be finite")


@dataclass(frozen=True)
class PassageTime:
    """First-passage time; ``censored`` when no crossing by the horizon."""

    time: float
    censored: bool

    def export_value(self, dummy: float = DUMMY_TIME) -> float:
        return dummy if self.censored else self.time


def first_passage(ts: TimeSeriesForecast, spec: EventSpec) -> PassageTime:
    """First time the series reaches ``spec.threshold``.

    If the first sample already reaches it, the first lead time is
    returned. Otherwise the crossing is linearly interpolated between the
    two samples that bracket it. No crossing within the samples, or a
    crossing after the horizon, is censored at the horizon.
    """
    lt, v, h = ts.lead_times, ts.values, spec.threshold
    hit = np.flatnonzero(v >= h)
    if hit.size == 0:
        return PassageTime(spec.horizon, True)
    k = int(hit[0])
    if k == 0:
        time = float(lt[0])
    else:
        t0, t1, v0, v1 = lt[k - 1], lt[k], v[k - 1], v[k]
        time = float(t0 + (h - v0) / (v1 - v0) * (t1 - t0))
    if time > spec.horizon:
        return PassageTime(spec.horizon, True)
    return PassageTime(time, False)


def ensemble_to_event_forecast(members: Sequence[TimeSeriesForecast], spec: EventSpec,
                               dummy: float = DUMMY_TIME) -> CensoredDist:
    """Censored empirical CDF of member first-passage times."""
    if len(members) == 0:
        raise ValidationError("ensemble needs at least one member")
    if not dummy > spec.horizon:
        raise DomainError("dummy time must exceed the horizon")
    times = [first_passage(m, spec).export_value(dummy) for m in members]
    return CensoredDist(EmpiricalDist(times), spec.horizon)


# ---------------------------------------------------------------- records

@dataclass(frozen=True)
class ForecastRecord:
    case_id: str
    kind: str
    payload: tuple[float, ...]
    realization: float
    censored: bool = False
    group: str = ""

    def __post_init__(self):
        if self.kind not in RECORD_KINDS:
            raise ValidationError(f"{self.case_id}: unknown kind {self.kind!r}")
        payload = tuple(float(x) for x in self.payload)
        need = PAYLOAD_ARITY.get(self.kind)
        if need is not None and len(payload) != need:
            raise ValidationError(f"{self.case_id}: {self.kind} payload needs {need} values, got {len(payload)}")
        if self.kind == "ensemble" and len(payload) == 0:
            raise ValidationError(f"{self.case_id}: empty ensemble")
        if not all(math.isfinite(x) for x in payload):
            raise ValidationError(f"{self.case_id}: non-finite payload")
        if not (math.isfinite(self.realization) and self.realization >= 0):
            raise ValidationError(f"{self.case_id}: realization must be finite and nonnegative")
        object.__setattr__(self, "payload", payload)
        object.__setattr__(self, "realization", float(self.realization))
        object.__setattr__(self, "censored", bool(self.censored))

    def distribution(self):
        if self.kind == "ensemble":
            return EmpiricalDist(self.payload)
        if self.kind == "gamma":
            return GammaDist(*self.payload)
        if self.kind == "point":
            return PointMass(self.payload[0])
        raise UnsupportedDistributionError(f"{self.kind} records are not distributions")


def _parse_payload(text: str, lineno: int) -> tuple[float, ...]:
    if text.strip() == "":
        return ()
    try:
        return tuple(float(x) for x in text.split(";"))
    except ValueError:
        raise ValidationError(f"line {lineno}: bad payload {text!r}") from None


def _parse_flag(text: str, lineno: int) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes"):
        return True
    if t in ("0", "false", "no", ""):
        return False
    raise ValidationError(f"line {lineno}: bad censored flag {text!r}")


def read_records(src: str | Path | TextIO) -> list[ForecastRecord]:
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_records(fh)
    reader = csv.reader(src)
    header = next(reader, None)
    if header != RECORD_HEADER:
        raise ValidationError(f"expected header {','.join(RECORD_HEADER)}, got {header}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(RECORD_HEADER):
            raise ValidationError(f"line {lineno}: expected {len(RECORD_HEADER)} fields, got {len(row)}")
        case_id, group, kind, payload, real, cens = row
        try:
            realization = float(real)
        except ValueError:
            raise ValidationError(f"line {lineno}: bad realization {real!r}") from None
        try:
            out.append(ForecastRecord(case_id, kind.strip(), _parse_payload(payload, lineno),
                                      realization, _parse_flag(cens, lineno), group))
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
    return out


def write_records(records: Iterable[ForecastRecord], dest: str | Path | TextIO) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            return write_records(records, fh)
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(RECORD_HEADER)
    for r in records:
        w.writerow([r.case_id, r.group, r.kind, ";".join(fmt(x) for x in r.payload),
                    fmt(r.realization), "1" if r.censored else "0"])


def read_ensemble_long(src: str | Path | TextIO) -> dict[str, list[TimeSeriesForecast]]:
    """Long-format ensemble series grouped by case, members in file order."""
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_ensemble_long(fh)
    reader = csv.reader(src)
    header = next(reader, None)
    if header != ENSEMBLE_HEADER:
        raise ValidationError(f"expected header {','.join(ENSEMBLE_HEADER)}, got {header}")
    cases: dict[str, dict[str, tuple[list, list]]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ValidationError(f"line {lineno}: expected 4 fields, got {len(row)}")
        try:
            lt, val = float(row[2]), float(row[3])
        except ValueError:
            raise ValidationError(f"line {lineno}: non-numeric sample") from None
        lts, vals = cases.setdefault(row[0], {}).setdefault(row[1], ([], []))
        lts.append(lt)
        vals.append(val)
    out = {}
    for cid, members in cases.items():
        series = []
        for mid, (lts, vals) in members.items():
            order = np.argsort(lts, kind="stable")
            series.append(TimeSeriesForecast(cid, mid, np.asarray(lts)[order], np.asarray(vals)[order]))
        out[cid] = series
    return out


def first_passage_records(cases: dict[str, list[TimeSeriesForecast]], spec: EventSpec,
                          observed: str = "obs", group_sep: str | None = None,
                          dummy: float = DUMMY_TIME) -> list[ForecastRecord]:
    """Turn ensemble series into ``ensemble`` records.

    The member named ``observed`` supplies the realization; all others are
    forecast members. Non-crossing times are exported as ``dummy``. With
    ``group_sep``, the group is the part of the case id before the first
    separator.
    """
    if not dummy > spec.horizon:
        raise DomainError("dummy time must exceed the horizon")
    out = []
    for cid, members in cases.items():
        obs = [m for m in members if m.member == observed]
        fc = [m for m in members if m.member != observed]
        if len(obs) != 1:
            raise ValidationError(f"case {cid}: expected exactly one {observed!r} member")
        if not fc:
            raise ValidationError(f"case {cid}: no forecast members")
        real = first_passage(obs[0], spec)
        payload = tuple(first_passage(m, spec).export_value(dummy) for m in fc)
        group = cid.split(group_sep, 1)[0] if group_sep else ""
        out.append(ForecastRecord(cid, "ensemble", payload, real.export_value(dummy), real.censored, group))
    return out


# ---------------------------------------------------------------- scoring

METHODS = ("crps", "twcrps", "twlogs", "twql", "twis", "survcrps", "lins", "cindex", "aucs")
PER_CASE = METHODS[:7]
NEEDS_TAU = ("twcrps", "twlogs", "twql", "twis", "survcrps")


@dataclass(frozen=True)
class ScoringMethod:
    """Which score to compute and its parameters."""

    name: str
    tau: float | None = None
    alpha: float = 0.9
    s: float | None = None
    fairness: str = "fair"

    def __post_init__(self):
        if self.name not in METHODS:
            raise ValidationError(f"unknown method {self.name!r}; choose from {', '.join(METHODS)}")
        if self.name in NEEDS_TAU and self.tau is None:
            raise ValidationError(f"method {self.name} needs --tau")
        if self.tau is not None and not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValidationError("tau must be positive and finite")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        if self.name == "aucs" and self.s is None:
            raise ValidationError("method aucs needs --s")
        if self.fairness not in ("fair", "empirical"):
            raise ValidationError("fairness must be fair or empirical")


@dataclass
class ScoringResult:
    method: ScoringMethod
    case_ids: list[str]
    groups: list[str]
    series: ScoreSeries
    skipped: list[tuple[str, str]] = field(default_factory=list)

    @property
    def scores(self) -> np.ndarray:
        return self.series.scores

    def mean(self) -> float:
        return self.series.mean()

    def group_means(self) -> tuple[list[str], np.ndarray, np.ndarray]:
        return group_means(self.scores, self.groups)

    def summary(self) -> dict:
        keys, means, counts = self.group_means()
        return {
            "method": self.method.name,
            "tau": self.method.tau,
            "alpha": self.method.alpha,
            "n": len(self.case_ids),
            "mean": self.mean(),
            "excluded_infinite": self.series.n_excluded,
            "skipped": [{"case_id": c, "reason": r} for c, r in self.skipped],
            "groups": {k: {"mean": float(m), "count": int(c)} for k, m, c in zip(keys, means, counts)},
        }


def group_means(scores, groups: Sequence[str]) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Means of finite scores per group, groups in order of first appearance."""
    scores = np.asarray(scores, dtype=float)
    keys: list[str] = []
    index: dict[str, int] = {}
    for g in groups:
        if g not in index:
            index[g] = len(keys)
            keys.append(g)
    inv = np.fromiter((index[g] for g in groups), dtype=np.intp, count=len(groups))
    ok = np.isfinite(scores)
    sums = np.zeros(len(keys))
    counts = np.zeros(len(keys), dtype=np.int64)
    # ordered accumulation keeps results independent of numpy's summation tree
    for i in np.flatnonzero(ok):
        sums[inv[i]] += scores[i]
        counts[inv[i]] += 1
    with np.errstate(invalid="ignore"):
        means = sums / counts
    return keys, means, counts


def _realization(r: ForecastRecord, tau: float | None) -> float:
    if r.censored:
        if tau is None:
            raise ValidationError("censored realization needs a censoring-aware method")
        if r.realization < tau:
            raise ValidationError(f"censored realization {r.realization:g} lies below tau={tau:g}")
    return r.realization


def score_record(r: ForecastRecord, m: ScoringMethod) -> float:
    """Score one record; raises on incompatible kinds or bad values."""
    name = m.name
    t = _realization(r, m.tau if name != "crps" and name != "lins" else None)
    if name == "crps":
        if r.kind == "gamma":
            return float(crps_gamma(r.distribution(), t))
        if r.kind in ("ensemble", "point"):
            return crps(r.distribution(), t)
    elif name == "twcrps":
        if r.kind == "ensemble":
            if m.fairness == "fair" and len(r.payload) < 2:
                raise ValidationError("fair twCRPS needs at least two members")
            return float(twcrps_ensemble(np.asarray(r.payload), t, m.tau, m.fairness))
        if r.kind == "gamma":
            return float(twcrps_gamma(r.distribution(), t, m.tau))
        if r.kind == "point":
            return twcrps(r.distribution(), t, m.tau)
    elif name == "survcrps":
        if r.kind == "gamma":
            return float(surv_crps_gamma(r.distribution(), t, m.tau))
        if r.kind in ("ensemble", "point"):
            return surv_crps(r.distribution(), t, m.tau)
    elif name == "twlogs":
        if r.kind == "gamma":
            return float(twlog_score(r.distribution(), t, m.tau))
    elif name == "lins":
        if r.kind == "gamma":
            return float(lin_score(r.distribution(), t))
    elif name == "twql":
        if r.kind in ("quantile", "point"):
            return float(tw_quantile_loss(m.alpha, m.tau, r.payload[0], t))
    elif name == "twis":
        if r.kind == "interval":
            lo, hi = r.payload
            return float(tw_interval_score(m.alpha, m.tau, (lo, hi), t))
    raise UnsupportedDistributionError(f"method {name} cannot score {r.kind} records")


def score_dataset(records: Sequence[ForecastRecord], method: ScoringMethod) -> ScoringResult:
    """Score every record in input order.

    Records that cannot be scored are skipped and listed with a reason;
    an empty result is an error.
    """
    if method.name not in PER_CASE:
        raise ValidationError(f"{method.name} is a dataset-level index; use discrimination_index")
    ids, groups, scores, skipped = [], [], [], []
    for r in records:
        try:
            v = score_record(r, method)
        except (ValidationError, DomainError, UnsupportedDistributionError, ConvergenceError) as exc:
            skipped.append((r.case_id, str(exc)))
            continue
        ids.append(r.case_id)
        groups.append(r.group)
        scores.append(v)
    if not scores:
        raise ValidationError(f"no records could be scored ({len(skipped)} skipped)")
    return ScoringResult(method, ids, groups, ScoreSeries(np.array(scores), method.name), skipped)


def discrimination_index(records: Sequence[ForecastRecord], method: ScoringMethod) -> dict:
    """c-index or AUC_s over ``risk`` records."""
    risk = [r for r in records if r.kind == "risk"]
    skipped = [(r.case_id, f"{r.kind} record is not a risk") for r in records if r.kind != "risk"]
    if not risk:
        raise ValidationError("no risk records")
    p = np.array([r.payload[0] for r in risk])
    tau = method.tau if method.tau is not None else math.inf
    t = np.array([r.realization for r in risk])
    for r in risk:
        if r.censored and r.realization < tau:
            raise ValidationError(f"{r.case_id}: censored realization below tau")
    s = method.s if method.s is not None else tau
    d = RiskDataset(p, t, s, tau)
    value = c_index(d) if method.name == "cindex" else auc_s(d)
    return {"method": method.name, "value": value, "n": len(risk), "s": s, "tau": tau,
            "skipped": [{"case_id": c, "reason": why} for c, why in skipped]}


def write_scores(result: ScoringResult, dest: TextIO) -> None:
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(SCORE_HEADER)
    for cid, g, v in zip(result.case_ids, result.groups, result.scores):
        w.writerow([cid, g, fmt(v)])


def write_group_means(result: ScoringResult, dest: TextIO) -> None:
    keys, means, counts = result.group_means()
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(GROUP_HEADER)
    for k, m, c in zip(keys, means, counts):
        w.writerow([k, fmt(m), int(c)])


def read_scores(src: str | Path | TextIO) -> tuple[list[str], list[str], np.ndarray]:
    """Read a ``case_id,group,score`` file (or ``group,mean_score,count``)."""
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_scores(fh)
    reader = csv.reader(src)
    header = next(reader, None)
    if header == SCORE_HEADER:
        ids, groups, vals = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValidationError(f"line {lineno}: expected 3 fields")
            ids.append(row[0])
            groups.append(row[1])
            vals.append(_float(row[2], lineno))
        return ids, groups, np.array(vals, dtype=float)
    if header == GROUP_HEADER:
        ids, vals = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValidationError(f"line {lineno}: expected 3 fields")
            ids.append(row[0])
            vals.append(_float(row[1], lineno))
        return ids, list(ids), np.array(vals, dtype=float)
    raise ValidationError(f"unrecognized score file header {header}")


def _float(text: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"line {lineno}: bad number {text!r}") from None
