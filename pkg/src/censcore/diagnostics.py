"""Diagnostic curves: Brier-score curves, Murphy diagrams, reliability.

Curves are sampled functions with strictly increasing abscissas. They
serialize to CSV (``abscissa,value,label``) with 17 significant digits,
so a write/read round trip is bit-exact.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy.optimize import isotonic_regression

from . import kernels
from .distributions import GammaDist, PredictiveDistribution
from .errors import DomainError, ValidationError
from .point_scoring import IntervalForecast

CURVE_HEADER = ["abscissa", "value", "label"]
CURVE_KINDS = ("brier_decomposition", "murphy", "reliability", "generic")


def fmt(x: float) -> str:
    """Float formatting shared by every CSV writer (round-trip exact)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class Curve:
    """A sampled function ``value(abscissa)``."""

    abscissa: np.ndarray
    values: np.ndarray
    label: str = ""
    kind: str = "generic"

    def __post_init__(self):
        x = np.asarray(self.abscissa, dtype=float).ravel()
        y = np.asarray(self.values, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValidationError("abscissa and values differ in length")
        if x.size == 0:
            raise ValidationError("a curve needs at least one point")
        if np.any(np.diff(x) <= 0):
            raise ValidationError("curve abscissas must be strictly increasing")
        if self.kind not in CURVE_KINDS:
            raise DomainError(f"unknown curve kind {self.kind!r}")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "abscissa", x)
        object.__setattr__(self, "values", y)

    def __len__(self):
        return self.abscissa.size

    def __call__(self, s):
        """Linear interpolation (constant beyond the ends)."""
        return np.interp(s, self.abscissa, self.values)

    def rows(self):
        for x, y in zip(self.abscissa, self.values):
            yield [fmt(x), fmt(y), self.label]


def write_curves(curves: Iterable[Curve], dest: str | Path | TextIO) -> None:
    """Write curves to one CSV with header ``abscissa,value,label``."""
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for c in curves:
            w.writerows(c.rows())

    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            emit(fh)
    else:
        emit(dest)


def read_curves(src: str | Path | TextIO, kind: str = "generic") -> dict[str, Curve]:
    """Read a curve CSV; returns curves keyed by label in file order."""
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_curves(fh, kind)
    reader = csv.reader(src)
    header = next(reader, None)
    if header != CURVE_HEADER:
        raise ValidationError(f"expected header {','.join(CURVE_HEADER)}, got {header}")
    cols: dict[str, tuple[list, list]] = {}
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 3:
            raise ValidationError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        xs, ys = cols.setdefault(row[2], ([], []))
        xs.append(x)
        ys.append(y)
    return {lab: Curve(np.array(xs), np.array(ys), lab, kind) for lab, (xs, ys) in cols.items()}


def curves_to_csv_text(curves: Iterable[Curve]) -> str:
    buf = io.StringIO()
    write_curves(curves, buf)
    return buf.getvalue()


def write_svg(curves: Sequence[Curve], dest: str | Path, width: int = 640, height: int = 400,
              title: str = "") -> None:
    """Minimal SVG line plot of one or more curves."""
    palette = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]
    pad = 50
    xs = np.concatenate([c.abscissa for c in curves])
    ys = np.concatenate([c.values for c in curves])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = min(0.0, float(ys.min())), float(ys.max())
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad}" y="{height - pad + 20}" font-size="12">{x0:.3g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 20}" font-size="12" text-anchor="end">{x1:.3g}</text>',
        f'<text x="{pad - 5}" y="{height - pad}" font-size="12" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{pad - 5}" y="{pad + 4}" font-size="12" text-anchor="end">{y1:.3g}</text>',
    ]
    if title:
        out.append(f'<text x="{width / 2}" y="{pad / 2}" font-size="14" text-anchor="middle">{_esc(title)}</text>')
    for k, c in enumerate(curves):
        colour = palette[k % len(palette)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(c.abscissa, c.values))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        out.append(
            f'<text x="{width - pad}" y="{pad + 16 * (k + 1)}" font-size="12" fill="{colour}" '
            f'text-anchor="end">{_esc(c.label)}</text>'
        )
    out.append("</svg>")
    Path(dest).write_text("\n".join(out) + "\n")


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------- grids and areas

def default_grid(values, tau: float, n_fill: int = 200, max_data: int | None = None) -> np.ndarray:
    """Sorted unique censored data values plus ``n_fill`` even points on [0, tau].

    ``max_data`` thins the data values to at most that many (evenly by
    rank) when exact breakpoints are not needed.
    """
    if not tau > 0:
        raise DomainError("tau must be positive")
    data = np.unique(np.minimum(np.asarray(values, dtype=float).ravel(), tau))
    data = data[np.isfinite(data) & (data >= 0)]
    if max_data is not None and data.size > max_data:
        idx = np.linspace(0, data.size - 1, max_data).round().astype(int)
        data = data[idx]
    return np.unique(np.concatenate([data, np.linspace(0.0, tau, n_fill + 1)]))


def curve_area(c: Curve, lo: float, hi: float, rule: str = "trapezoid") -> float:
    """Area under a curve on [lo, hi].

    ``rule="trapezoid"`` integrates the piecewise-linear interpolant;
    ``rule="step"`` integrates the right-continuous step function that
    holds each value until the next abscissa (exact for Murphy curves
    when the grid contains every breakpoint). Outside the sampled range
    the curve counts as zero for ``step`` and constant for ``trapezoid``.
    """
    if hi < lo:
        raise DomainError("need lo <= hi")
    x, y = c.abscissa, c.values
    if rule == "trapezoid":
        inner = (x > lo) & (x < hi)
        xs = np.concatenate([[lo], x[inner], [hi]])
        ys = np.interp(xs, x, y)
        return float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)))
    if rule == "step":
        right = np.append(x[1:], x[-1])
        left = np.clip(x, lo, hi)
        right = np.clip(right, lo, hi)
        return float(np.sum(y * (right - left)))
    raise DomainError(f"unknown rule {rule!r}")


def curve_crossings(a: Curve, b: Curve) -> list[float]:
    """Abscissas where ``a - b`` changes sign, on the union of both grids."""
    grid = np.union1d(a.abscissa, b.abscissa)
    diff = a(grid) - b(grid)
    out = []
    sign = np.sign(diff)
    nz = np.flatnonzero(sign != 0)
    for i, j in zip(nz[:-1], nz[1:]):
        if sign[i] != sign[j]:
            # root of the linear interpolant between the bracketing points
            x0, x1, d0, d1 = grid[i], grid[j], diff[i], diff[j]
            if j == i + 1:
                out.append(float(x0 - d0 * (x1 - x0) / (d1 - d0)))
            else:
                out.append(float(0.5 * (grid[i + 1] + grid[j - 1])))
    return out


# ---------------------------------------------------------------- Brier curves

def brier_curve(forecasts, realizations, grid, label: str = "", chunk: int = 64) -> Curve:
    """Mean Brier score ``(1{s >= t} - F(s))^2`` at each threshold ``s``.

    Parameters
    ----------
    forecasts : GammaDist batch, or sequence of PredictiveDistribution
    realizations : array_like
        One realization per forecast.
    grid : array_like
        Strictly increasing thresholds.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be nonempty and strictly increasing")
    t = np.asarray(realizations, dtype=float).ravel()
    if t.size == 0:
        raise ValidationError("no cases")
    out = np.empty(grid.size)
    if isinstance(forecasts, GammaDist):
        if forecasts.batch_shape not in ((), t.shape):
            raise ValidationError("forecast batch and realizations differ in length")
        for k in range(0, grid.size, chunk):
            s = grid[k:k + chunk, None]
            F = forecasts.cdf(np.broadcast_to(s, (s.shape[0], t.size)))
            out[k:k + chunk] = np.mean(((s >= t[None, :]) - F) ** 2, axis=1)
    else:
        dists: Sequence[PredictiveDistribution] = list(forecasts)
        if len(dists) != t.size:
            raise ValidationError("forecasts and realizations differ in length")
        acc = np.zeros(grid.size)
        for F, ti in zip(dists, t):
            acc += ((grid >= ti) - np.asarray(F.cdf(grid), dtype=float)) ** 2
        out = acc / t.size
    return Curve(grid, out, label, "brier_decomposition")


# ---------------------------------------------------------------- Murphy curves

@dataclass(frozen=True)
class QuantilePairs:
    """Quantile forecasts ``x`` at level ``alpha`` with realizations ``t``."""

    x: np.ndarray
    t: np.ndarray
    alpha: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        t = np.asarray(self.t, dtype=float).ravel()
        if x.shape != t.shape:
            raise ValidationError("forecasts and realizations differ in length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(t))):
            raise ValidationError("quantile pairs must be finite")
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)

    def __len__(self):
        return self.x.size

    def censored(self, tau: float) -> "QuantilePairs":
        return QuantilePairs(np.minimum(self.x, tau), np.minimum(self.t, tau), self.alpha)


def _cover_count(lo, hi, theta):
    # number of half-open intervals [lo_i, hi_i) containing each theta
    return (np.searchsorted(np.sort(lo), theta, side="right")
            - np.searchsorted(np.sort(hi), theta, side="right"))


def murphy_curve(pairs: QuantilePairs, grid, label: str = "") -> Curve:
    """Mean elementary score against decision threshold theta."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be nonempty and strictly increasing")
    n = len(pairs)
    if n == 0:
        raise ValidationError("no quantile pairs")
    x, t, a = pairs.x, pairs.t, pairs.alpha
    high = t < x  # false alarm on [t, x)
    low = x < t  # miss on [x, t)
    fa = _cover_count(t[high], x[high], grid)
    ms = _cover_count(x[low], t[low], grid)
    vals = ((1.0 - a) * fa + a * ms) / n
    return Curve(grid, vals, label, "murphy")


def murphy_grid(pairs: QuantilePairs, tau: float | None = None) -> np.ndarray:
    """Breakpoints of the Murphy curve (data values) plus midpoints, from 0."""
    vals = np.concatenate([pairs.x, pairs.t, [0.0]])
    if tau is not None:
        vals = np.append(np.minimum(vals, tau), tau)
    b = np.unique(vals[vals >= 0])
    return np.unique(np.concatenate([b, 0.5 * (b[1:] + b[:-1])]))


# ---------------------------------------------------------------- reliability

@dataclass(frozen=True)
class ReliabilityCurve:
    """Isotonic step function from forecast value to recalibrated value.

    Evaluates to the fitted value at the greatest knot <= x, and to the
    first fitted value below the first knot.
    """

    knots: np.ndarray
    fitted: np.ndarray
    alpha: float

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        f = np.asarray(self.fitted, dtype=float)
        if k.size == 0 or k.shape != f.shape:
            raise ValidationError("reliability curve needs matching, nonempty knots and values")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "fitted", f)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, x, side="right") - 1, 0, None)
        out = self.fitted[idx]
        return float(out) if out.ndim == 0 else out

    def as_curve(self, label: str = "") -> Curve:
        return Curve(self.knots, self.fitted, label or f"q{self.alpha:g}", "reliability")


def lower_quantile(values, alpha: float) -> float:
    """Lower empirical quantile: the ceil(alpha n)-th smallest value."""
    v = np.sort(np.asarray(values, dtype=float))
    k = max(1, int(np.ceil(alpha * v.size - 1e-9)))
    return float(v[k - 1])


def isotonic_quantile_fit(pairs: QuantilePairs) -> ReliabilityCurve:
    """Min-max isotonic regression of realizations on quantile forecasts.

    Pairs are sorted by forecast (stable) and equal forecasts pooled into
    blocks. Block ``i`` gets ``min_{j >= i} max_{k <= i} q(blocks k..j)``
    with ``q`` the lower empirical ``alpha``-quantile; this fit minimizes
    every consistent scoring function for the quantile among monotone fits.
    """
    if len(pairs) == 0:
        raise ValidationError("no quantile pairs")
    order = np.argsort(pairs.x, kind="stable")
    xs = pairs.x[order]
    ts = pairs.t[order]
    knots, starts = np.unique(xs, return_index=True)
    offsets = np.append(starts, xs.size).astype(np.int64)
    fitted = kernels.minmax_isotonic(ts, offsets, pairs.alpha)
    return ReliabilityCurve(knots, fitted, pairs.alpha)


def recalibrate(curves: tuple[ReliabilityCurve, ReliabilityCurve], x) -> IntervalForecast:
    """Map a forecast ``x`` to the interval (lower(x), upper(x)).

    ``curves`` are fits at levels alpha/2 and 1 - alpha/2; the interval's
    level is their combined tail mass.
    """
    lower, upper = curves
    if not lower.alpha < upper.alpha:
        raise DomainError("lower curve must have the smaller level")
    lo, hi = float(lower(x)), float(upper(x))
    return IntervalForecast(lo, hi, alpha=lower.alpha + (1.0 - upper.alpha))


def recalibrate_many(curves: tuple[ReliabilityCurve, ReliabilityCurve], x):
    """Vectorized :func:`recalibrate`; returns (lower, upper) arrays."""
    lower, upper = curves
    return np.asarray(lower(x), dtype=float), np.asarray(upper(x), dtype=float)


def isotonic_mean_fit(x, y) -> ReliabilityCurve:
    """Least-squares isotonic regression of ``y`` on ``x`` (pool adjacent violators).

    Ties in ``x`` are pooled by averaging before the fit.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size == 0 or x.shape != y.shape:
        raise ValidationError("need matching, nonempty x and y")
    knots, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
    means = np.bincount(inv, weights=y) / counts
    res = isotonic_regression(means, weights=counts.astype(float), increasing=True)
    return ReliabilityCurve(knots, res.x, 0.5)
