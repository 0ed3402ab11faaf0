"""Command-line interface.

Settings resolve as: command-line flags, then the key-value file named
by ``CENSCORE_CONFIG``, then built-in defaults. The file uses ``key =
value`` lines; keys before any ``[section]`` apply to every subcommand,
keys under ``[score]`` (etc.) only to that subcommand. Keys are flag
names with dashes or underscores.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import synthetic, workbench
from .distributions import CensoredDist
from .errors import ConvergenceError, DomainError, UnsupportedDistributionError, ValidationError
from .inference import ScoreSeries, dm_test

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
CONFIG_ENV = "CENSCORE_CONFIG"


class CLIError(ValidationError):
    pass


# ---------------------------------------------------------------- helpers

def _taus(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tau list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty tau list")
    return vals


def _lag(text: str):
    if text == "auto":
        return "auto"
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"lag must be 'auto' or an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("lag must be nonnegative")
    return v


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise CLIError(f"bad boolean {text!r} in config")


def _open_out(path: str | None):
    if path in (None, "-"):
        return _NoClose(sys.stdout)
    return open(path, "w", newline="")


class _NoClose:
    def __init__(self, fh):
        self.fh = fh

    def __enter__(self):
        return self.fh

    def __exit__(self, *exc):
        self.fh.flush()
        return False


def _emit_json(obj, path):
    with _open_out(path) as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=False, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def _warn_skipped(skipped):
    for cid, why in skipped:
        print(f"warning: skipped {cid}: {why}", file=sys.stderr)


def _grouped(records):
    groups: dict[str, list] = {}
    for r in records:
        groups.setdefault(r.group or "all", []).append(r)
    return groups


# ---------------------------------------------------------------- subcommands

def cmd_synth(args) -> int:
    bundle = synthetic.run_experiment_tables(n=args.n, seed=args.seed, taus=args.taus,
                                             pvalues=not args.no_pvalues)
    if args.json:
        with _open_out(args.output) as fh:
            fh.write(bundle.to_json() + "\n")
    else:
        with _open_out(args.output) as fh:
            fh.write(bundle.to_csv())
    if args.pvalues_output:
        with open(args.pvalues_output, "w", newline="") as fh:
            fh.write(bundle.pvalues_to_csv())
    for note in bundle.notes:
        print(f"note: {note}", file=sys.stderr)
    return EXIT_OK


def cmd_score(args) -> int:
    records = workbench.read_records(args.input)
    method = workbench.ScoringMethod(args.method, tau=args.tau, alpha=args.alpha, s=args.s,
                                     fairness=args.fairness)
    if args.method in ("cindex", "aucs"):
        summary = workbench.discrimination_index(records, method)
        _warn_skipped([(d["case_id"], d["reason"]) for d in summary["skipped"]])
        if args.json:
            summary = dict(summary, tau=_finite_or_none(summary["tau"]), s=_finite_or_none(summary["s"]))
            _emit_json(summary, args.output)
        else:
            with _open_out(args.output) as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["method", "value", "n"])
                w.writerow([summary["method"], dg.fmt(summary["value"]), summary["n"]])
        return EXIT_OK
    result = workbench.score_dataset(records, method)
    _warn_skipped(result.skipped)
    if args.json:
        summary = result.summary()
        summary["mean"] = _finite_or_none(summary["mean"])
        _emit_json(summary, args.output)
    else:
        with _open_out(args.output) as fh:
            if args.group_by == "group":
                workbench.write_group_means(result, fh)
            else:
                workbench.write_scores(result, fh)
    return EXIT_OK


def _quantile_pairs(records, alpha, tau):
    recs = [r for r in records if r.kind in ("quantile", "point")]
    if not recs:
        raise CLIError("no quantile or point records")
    for r in recs:
        if r.censored and (tau is None or r.realization < tau):
            raise CLIError(f"{r.case_id}: censored realization needs --tau at or below its value")
    x = np.array([r.payload[0] for r in recs])
    t = np.array([r.realization for r in recs])
    pairs = dg.QuantilePairs(x, t, alpha)
    return recs, (pairs.censored(tau) if tau is not None else pairs)


def cmd_murphy(args) -> int:
    records = workbench.read_records(args.input)
    recs, pairs = _quantile_pairs(records, args.alpha, args.tau)
    grid = dg.murphy_grid(pairs, args.tau)
    curves, areas = [], {}
    hi = args.tau if args.tau is not None else float(grid[-1])
    for label, group in _grouped(recs).items():
        _, gp = _quantile_pairs(group, args.alpha, args.tau)
        c = dg.murphy_curve(gp, grid, label)
        curves.append(c)
        areas[label] = dg.curve_area(c, 0.0, hi, rule="step")
    _write_curves(curves, args, {"alpha": args.alpha, "tau": args.tau, "area": areas})
    return EXIT_OK


def cmd_brier(args) -> int:
    records = workbench.read_records(args.input)
    recs = [r for r in records if r.kind in ("ensemble", "gamma", "point")]
    if not recs:
        raise CLIError("no distributional records")
    for r in recs:
        if r.censored and (args.tau is None or r.realization < args.tau):
            raise CLIError(f"{r.case_id}: censored realization needs --tau at or below its value")
    t_all = np.array([r.realization for r in recs])
    top = args.tau if args.tau is not None else float(np.max(t_all))
    if not top > 0:
        raise CLIError("need a positive --tau or positive realizations")
    grid = dg.default_grid(t_all, top, n_fill=args.grid_n, max_data=args.max_data)
    curves, areas = [], {}
    for label, group in _grouped(recs).items():
        dists = [r.distribution() for r in group]
        t = np.array([r.realization for r in group])
        if args.tau is not None:
            dists = [CensoredDist(d, args.tau) for d in dists]
            t = np.minimum(t, args.tau)
        c = dg.brier_curve(dists, t, grid, label)
        curves.append(c)
        areas[label] = dg.curve_area(c, 0.0, top)
    _write_curves(curves, args, {"tau": args.tau, "area": areas})
    return EXIT_OK


def _curves_json(curves):
    return {c.label: {"abscissa": c.abscissa, "value": c.values} for c in curves}


def _records_json(records):
    return [{"case_id": r.case_id, "group": r.group, "kind": r.kind, "payload": list(r.payload),
             "realization": r.realization, "censored": r.censored} for r in records]


def _write_curves(curves, args, summary):
    if args.json:
        _emit_json(dict(summary, curves=_curves_json(curves)), args.output)
    else:
        with _open_out(args.output) as fh:
            dg.write_curves(curves, fh)
    if args.svg:
        dg.write_svg(curves, args.svg)


def cmd_reliability(args) -> int:
    if not 0 < args.alpha_lo < args.alpha_hi < 1:
        raise CLIError("need 0 < alpha-lo < alpha-hi < 1")
    train = workbench.read_records(args.train)
    _, lo_pairs = _quantile_pairs(train, args.alpha_lo, args.tau)
    _, hi_pairs = _quantile_pairs(train, args.alpha_hi, args.tau)
    fits = (dg.isotonic_quantile_fit(lo_pairs), dg.isotonic_quantile_fit(hi_pairs))
    if args.apply is None:
        _write_curves([f.as_curve(f"q{f.alpha:g}") for f in fits], args,
                      {"alpha_lo": args.alpha_lo, "alpha_hi": args.alpha_hi, "n_train": len(lo_pairs)})
        return EXIT_OK
    apply = [r for r in workbench.read_records(args.apply) if r.kind in ("quantile", "point")]
    if not apply:
        raise CLIError("no quantile or point records to recalibrate")
    x = np.array([r.payload[0] for r in apply])
    lo, hi = dg.recalibrate_many(fits, x)
    out = [workbench.ForecastRecord(r.case_id, "interval", (a, b), r.realization, r.censored, r.group)
           for r, a, b in zip(apply, lo, hi)]
    if args.json:
        _emit_json({"alpha_lo": args.alpha_lo, "alpha_hi": args.alpha_hi, "n": len(out),
                    "mean_width": float(np.mean(hi - lo)), "records": _records_json(out)}, args.output)
    else:
        with _open_out(args.output) as fh:
            workbench.write_records(out, fh)
    return EXIT_OK


def _score_series(path, pool):
    ids, groups, vals = workbench.read_scores(path)
    if pool:
        keys, means, _ = workbench.group_means(vals, groups)
        return list(keys), means
    return ids, vals


def cmd_dm(args) -> int:
    ids_a, a = _score_series(args.a, args.group_by == "group")
    ids_b, b = _score_series(args.b, args.group_by == "group")
    if ids_a != ids_b:
        raise CLIError("score files are not aligned: case ids (or groups) differ")
    res = dm_test(ScoreSeries(a, "a"), ScoreSeries(b, "b"), lag=args.lag, sided=args.sided)
    d = res.as_dict()
    if args.json:
        d = {k: (_finite_or_none(v) if isinstance(v, float) else v) for k, v in d.items()}
        _emit_json(d, args.output)
    else:
        with _open_out(args.output) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(d))
            w.writerow([dg.fmt(v) if isinstance(v, float) else v for v in d.values()])
    return EXIT_OK


def cmd_first_passage(args) -> int:
    spec = workbench.EventSpec(args.threshold, args.horizon)
    cases = workbench.read_ensemble_long(args.input)
    records = workbench.first_passage_records(cases, spec, observed=args.observed,
                                              group_sep=args.group_sep, dummy=args.dummy)
    if not args.json:
        with _open_out(args.output) as fh:
            workbench.write_records(records, fh)
    else:
        _emit_json({
            "threshold": args.threshold,
            "horizon": args.horizon,
            "cases": len(records),
            "censored_realizations": sum(r.censored for r in records),
            "members": sum(len(r.payload) for r in records),
            "censored_members": sum(sum(x > args.horizon for x in r.payload) for r in records),
            "records": _records_json(records),
        }, args.output)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", default="-", help="output path (default: stdout)")
    common.add_argument("--json", action="store_true",
                        help="write a JSON document (summary plus data) instead of CSV")

    p = argparse.ArgumentParser(prog="censcore",
                                description="Evaluate time-to-event forecasts against censored outcomes.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="run the five-forecaster synthetic experiment")
    s.add_argument("--n", type=int, default=synthetic.DEFAULT_N, help="number of cases")
    s.add_argument("--seed", type=int, default=synthetic.DEFAULT_SEED)
    s.add_argument("--taus", type=_taus, default=synthetic.DEFAULT_TAUS,
                   help="comma-separated censoring times (default 6,12)")
    s.add_argument("--no-pvalues", action="store_true", help="skip pairwise Diebold-Mariano tests")
    s.add_argument("--pvalues-output", help="also write pairwise p-values to this CSV")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("score", parents=[common], help="score a records file")
    s.add_argument("--input", required=True, help="records CSV")
    s.add_argument("--method", required=True, choices=workbench.METHODS)
    s.add_argument("--tau", type=float, help="censoring time")
    s.add_argument("--alpha", type=float, default=0.9, help="quantile level (twql) or interval level (twis)")
    s.add_argument("--s", type=float, help="risk horizon for aucs (cindex ignores it)")
    s.add_argument("--fairness", choices=("fair", "empirical"), default="fair",
                   help="ensemble twCRPS normalization")
    s.add_argument("--group-by", choices=("none", "group"), default="none",
                   help="write per-group mean scores instead of per-case scores")
    s.set_defaults(func=cmd_score)

    def curve_opts(s):
        s.add_argument("--svg", help="also draw the curves to this SVG file")

    s = sub.add_parser("murphy", parents=[common], help="Murphy curves of quantile forecasts")
    s.add_argument("--input", required=True, help="records CSV with quantile/point records")
    s.add_argument("--alpha", type=float, default=0.9)
    s.add_argument("--tau", type=float)
    curve_opts(s)
    s.set_defaults(func=cmd_murphy)

    s = sub.add_parser("brier-curve", parents=[common], help="Brier score against threshold")
    s.add_argument("--input", required=True, help="records CSV with ensemble/gamma/point records")
    s.add_argument("--tau", type=float)
    s.add_argument("--grid-n", type=int, default=200, help="evenly spaced grid points added to data values")
    s.add_argument("--max-data", type=int, default=None, help="thin data values on the grid to this many")
    curve_opts(s)
    s.set_defaults(func=cmd_brier)

    s = sub.add_parser("reliability", parents=[common],
                       help="isotonic quantile recalibration into intervals")
    s.add_argument("--train", required=True, help="records CSV with quantile/point records")
    s.add_argument("--apply", help="records CSV to recalibrate into interval records")
    s.add_argument("--alpha-lo", type=float, default=0.25)
    s.add_argument("--alpha-hi", type=float, default=0.75)
    s.add_argument("--tau", type=float)
    curve_opts(s)
    s.set_defaults(func=cmd_reliability)

    s = sub.add_parser("dm-test", parents=[common], help="Diebold-Mariano test on two score files")
    s.add_argument("--a", required=True, help="scores of the first system")
    s.add_argument("--b", required=True, help="scores of the second system")
    s.add_argument("--lag", type=_lag, default="auto")
    s.add_argument("--sided", choices=("one", "two"), default="one",
                   help="one: alternative that b scores lower than a")
    s.add_argument("--group-by", choices=("none", "group"), default="none",
                   help="pool per-case scores into group means first")
    s.set_defaults(func=cmd_dm)

    s = sub.add_parser("first-passage", parents=[common],
                       help="ensemble time series to event-time records")
    s.add_argument("--input", required=True, help="long-format ensemble CSV")
    s.add_argument("--threshold", type=float, required=True)
    s.add_argument("--horizon", type=float, required=True)
    s.add_argument("--observed", default="obs", help="member id holding the observation")
    s.add_argument("--group-sep", default=None,
                   help="group = case id prefix before this separator")
    s.add_argument("--dummy", type=float, default=workbench.DUMMY_TIME,
                   help="exported time for no crossing by the horizon")
    s.set_defaults(func=cmd_first_passage)
    return p


def load_config(path: str | os.PathLike) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CLIError(f"cannot read config {path}: {exc}") from None
    try:
        cp.read_string("[DEFAULT]\n" + text)
    except configparser.Error as exc:
        raise CLIError(f"bad config {path}: {exc}") from None
    return cp


def apply_config(parser: argparse.ArgumentParser, cp: configparser.ConfigParser) -> None:
    """Install config values as subparser defaults; flags still win."""
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in subs.choices.items():
        actions = {a.dest: a for a in sp._actions if a.dest != "help"}
        section = cp[name] if cp.has_section(name) else cp.defaults()
        own = set(cp._sections.get(name, {})) if cp.has_section(name) else set()
        values = {}
        for key, raw in section.items():
            dest = key.replace("-", "_")
            if dest not in actions:
                if key in own:
                    raise CLIError(f"config section [{name}] has unknown key {key!r}")
                continue
            action = actions[dest]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                values[dest] = _bool(raw)
            else:
                if action.choices is not None and action.type is None and raw not in action.choices:
                    raise CLIError(f"config {key}={raw!r} not in {list(action.choices)}")
                values[dest] = raw  # strings pass through the action's type
                action.required = False
        sp.set_defaults(**values)


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        cfg = os.environ.get(CONFIG_ENV)
        if cfg:
            apply_config(parser, load_config(cfg))
        args = parser.parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            warnings.showwarning = _show_warning
            return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INVALID
    except (ConvergenceError, FloatingPointError, OverflowError, ZeroDivisionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # downstream reader closed early (e.g. `| head`); stop quietly
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK
    except (ValidationError, DomainError, UnsupportedDistributionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
