"""Command-line front end: ``trgc {simulate,reverse,analyze,experiment,convert}``.

Errors are reported on stderr as ``error[<category>]: <message>`` with exit
status 2 (1 for unexpected failures).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import ConfigError, MissingInputError, TrgcError
from .granger import RULES, decide, trgc_from_series
from .inference import BootstrapSpec, bootstrap_ci, f_test_gc, select_order_bic
from .scenarios import run_grid
from .structural import to_var
from .time_reversal import reverse_varp
from .var_core import TimeSeries, require_stable, simulate

log = logging.getLogger("trgc")


def _order(value: str):
    if value == "bic":
        return "bic"
    try:
        order = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'bic', got {value!r}") from None
    if order < 1:
        raise argparse.ArgumentTypeError("order must be positive")
    return order


def _methods(value: str):
    methods = [m.strip() for m in value.split(",") if m.strip()]
    bad = [m for m in methods if m not in RULES]
    if bad or not methods:
        raise argparse.ArgumentTypeError(f"unknown methods {bad}; choose from {', '.join(RULES)}")
    return methods


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trgc", description="Time-reversed Granger causality toolkit.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="simulate a VAR model JSON into a series CSV")
    p.add_argument("model", help="model JSON")
    p.add_argument("-T", "--length", type=int, default=2000, help="number of samples (default 2000)")
    p.add_argument("--burn-in", type=int, default=0, help="discarded samples before the window")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV (default stdout)")

    p = sub.add_parser("reverse", help="time-reversed representation of a VAR model JSON")
    p.add_argument("model", help="model JSON")
    p.add_argument("--out", help="output JSON (default stdout)")

    p = sub.add_parser("analyze", help="score and test a bivariate series CSV")
    p.add_argument("series", help="series CSV with a t column")
    p.add_argument("--columns", default="x,y", help="two column names (default x,y)")
    p.add_argument("--order", type=_order, default="bic", help="lag order or 'bic' (default bic)")
    p.add_argument("--p-max", type=int, default=10, help="largest order tried by BIC (default 10)")
    p.add_argument("--method", type=_methods, default=list(io.DEFAULT_METHODS),
                   help=f"comma-separated decision rules from {', '.join(RULES)}")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--boot", type=int, default=500, help="bootstrap replicates (default 500)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output JSON (default stdout)")

    p = sub.add_parser("experiment", help="run a simulation experiment from a YAML config")
    p.add_argument("config", help="experiment config (YAML)")
    p.add_argument("--out", required=True, help="output prefix; writes <out>.csv and <out>.json")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--reps", type=int, help="override n_reps")
    p.add_argument("--order", type=_order, help="override inference.order")
    p.add_argument("--alpha", type=float, help="override inference.alpha")
    p.add_argument("--boot", type=int, help="override inference.n_boot")
    p.add_argument("--method", type=_methods, help="override methods")
    p.add_argument("--workers", type=int, help="worker processes (default $TRGC_THREADS or 1)")

    p = sub.add_parser("convert", help="reduce an SVAR or mixture JSON to a VAR model JSON")
    p.add_argument("model", help="SVAR (Gamma0) or mixture (M) JSON")
    p.add_argument("--out", help="output JSON (default stdout)")
    return parser


def _check_paths(args) -> None:
    for name in ("model", "series", "config"):
        path = getattr(args, name, None)
        if path is not None and not Path(path).is_file():
            raise MissingInputError(f"input file not found: {path}")
    out = getattr(args, "out", None)
    if out is not None and not Path(out).resolve().parent.is_dir():
        raise MissingInputError(f"output directory does not exist: {Path(out).parent}")


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        io._write_text(out, text)


def cmd_simulate(args) -> None:
    model = io.read_model(args.model)
    require_stable(model)
    if args.length < 1 or args.burn_in < 0:
        raise ConfigError("length must be positive and burn-in non-negative")
    series = simulate(model, args.length, np.random.default_rng(args.seed), args.burn_in)
    _emit(io.format_series_csv(series, f"seed={args.seed} T={args.length} burn_in={args.burn_in}"), args.out)


def cmd_reverse(args) -> None:
    _emit(io.dumps(reverse_varp(io.read_model(args.model)).to_dict()), args.out)


def analyze_series(series: TimeSeries, order, methods, alpha=0.05, n_boot=500, seed=0, p_max=10) -> dict:
    """Scores, tests and decisions for one bivariate series, as a JSON-ready dict."""
    p = select_order_bic(series, p_max) if order == "bic" else order
    report = {
        "T": series.length,
        "columns": list(series.names),
        "order": p,
        "order_selection": "bic" if order == "bic" else "fixed",
        "scores": trgc_from_series(series, p).report(),
    }
    f_tests = f_test_gc(series, p, alpha)
    report["f_tests"] = {k: {"statistic": v.statistic, "p_value": v.p_value, "df_num": v.df_num,
                             "df_den": v.df_den, "significant": v.significant} for k, v in f_tests.items()}
    intervals = None
    if any(m != "standard-gc" for m in methods):
        boot = bootstrap_ci(series, p, BootstrapSpec(n_boot, alpha, seed=seed))
        intervals = boot.intervals
        report["bootstrap"] = {"n_boot": n_boot, "alpha": alpha, "seed": seed}
        report["intervals"] = {k: {"lower": ci.lower, "upper": ci.upper, "estimate": ci.estimate}
                               for k, ci in intervals.items()}
    report["decisions"] = {m: decide(m, intervals, f_tests).direction for m in methods}
    return report


def cmd_analyze(args) -> None:
    columns = [c.strip() for c in args.columns.split(",")]
    if len(columns) != 2:
        raise ConfigError(f"--columns needs exactly two names, got {args.columns!r}")
    series = io.read_series_csv(args.series, columns)
    try:
        BootstrapSpec(args.boot, args.alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report = analyze_series(series, args.order, args.method, args.alpha, args.boot, args.seed, args.p_max)
    _emit(io.dumps(report), args.out)


def cmd_experiment(args) -> None:
    overrides = {}
    for flag, key in (("seed", "seed"), ("reps", "n_reps"), ("method", "methods"), ("workers", "workers")):
        if getattr(args, flag) is not None:
            overrides[key] = getattr(args, flag)
    inference = {k: v for k, v in (("order", args.order), ("alpha", args.alpha), ("n_boot", args.boot))
                 if v is not None}
    if inference:
        overrides["inference"] = inference
    plan = io.read_experiment_config(args.config, overrides)
    results = run_grid(plan.scenario, plan.grid, plan.methods, plan.inference, plan.workers)
    csv_path, json_path = io.write_results(results, plan, args.out)
    failed = sum(r.n_failed for r in results)
    if failed:
        log.warning("%d repetitions failed and were excluded", failed)
    print(f"wrote {csv_path} and {json_path} ({failed} failed repetitions)", file=sys.stderr)


def cmd_convert(args) -> None:
    _emit(io.dumps(to_var(io.read_structural(args.model)).to_dict()), args.out)


COMMANDS = {
    "simulate": cmd_simulate,
    "reverse": cmd_reverse,
    "analyze": cmd_analyze,
    "experiment": cmd_experiment,
    "convert": cmd_convert,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _check_paths(args)
        COMMANDS[args.command](args)
    except TrgcError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return 2
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error[invalid-input]: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
