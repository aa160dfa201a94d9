"""Command-line interface.

Exit codes: 0 success, 2 bad input or flags, 3 numerical failure.  A test
that rejects its hypothesis is still a success; the p-value is data.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import __version__
from .distributions import RngStream
from .estimation import (
    asymptotic_ci, bayes_estimate, ml_estimate, sufficient_stats,
)
from .exceptions import DataError, NumericalError
from .gof import gof_wishart, gof_wishart_bootstrap, mardia_test
from .intervals import describe, read_dataset
from .loss import risk_comparison
from .simulation import (
    DEFAULT_REPS, FULL_SCALE_REPS, SCENARIOS, SimulationConfig, emit_table, run_scenario,
    scenario_preset,
)

EXIT_INPUT = 2
EXIT_NUMERIC = 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _load(path):
    try:
        return read_dataset(path)
    except FileNotFoundError as exc:
        raise CliError(str(exc)) from exc
    except DataError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _matrix_text(name, a) -> list[str]:
    a = np.atleast_2d(a)
    rows = ["  ".join(f"{x:12.6g}" for x in row) for row in a]
    return [f"{name}:"] + ["  " + r for r in rows]


# --------------------------------------------------------------------------
# Sub-commands
# --------------------------------------------------------------------------

def cmd_describe(args) -> str:
    data = _load(args.file)
    return _dump(describe(data))


def cmd_estimate(args) -> str:
    data = _load(args.file)
    if args.wishart_df < data.p:
        raise CliError(f"--wishart-df must be >= p = {data.p}")
    stats = sufficient_stats(data)
    methods = ["ml", "bayes"] if args.method == "both" else [args.method]
    out = {"n": data.n, "p": data.p, "names": list(data.names), "estimates": []}
    for method in methods:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            est = ml_estimate(stats, args.wishart_df) if method == "ml" \
                else bayes_estimate(stats, args.wishart_df)
        entry = est.to_dict()
        if args.ci is not None:
            entry["ci"] = {"level": args.ci,
                           "intervals": [vars(w) for w in asymptotic_ci(est, stats, args.ci)]}
        out["estimates"].append(entry)
    if args.out == "json":
        return _dump(out)
    lines = [f"n = {data.n}, p = {data.p}, m = {args.wishart_df}"]
    for e in out["estimates"]:
        lines.append(f"== {e['method']} ==")
        lines += _matrix_text("mu", [e["mu"]])
        lines += _matrix_text("Sigma", e["sigma"])
        lines += _matrix_text("Lambda", e["lambda"])
        for w in e.get("ci", {}).get("intervals", []):
            lines.append(f"  {w['parameter']:>10}: {w['estimate']:.6g} "
                         f"[{w['lower']:.6g}, {w['upper']:.6g}]")
    return "\n".join(lines)


def cmd_simulate(args) -> str:
    reps = FULL_SCALE_REPS if args.full_scale else args.reps
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config: {exc}") from exc
        for key, val in (("scenario", args.scenario), ("n", args.n), ("seed", args.seed)):
            if val is not None:
                doc[key] = val
        if args.full_scale or args.reps != DEFAULT_REPS:
            doc["reps"] = reps
        if "n" not in doc:
            raise CliError("config needs 'n' (or pass --n)")
        config = SimulationConfig.from_dict(doc)
    else:
        if args.scenario is None or args.n is None:
            raise CliError("--scenario and --n are required without --config")
        config = SimulationConfig.preset(args.scenario, args.n, reps,
                                         0 if args.seed is None else args.seed)
    return emit_table(run_scenario(config), args.out).rstrip("\n")


def cmd_gof(args) -> str:
    data = _load(args.file)
    if data.n < 5:
        raise CliError(f"insufficient observations: n = {data.n} (need at least 5)")
    if args.wishart_df < data.p:
        raise CliError(f"--wishart-df must be >= p = {data.p}")
    if args.bootstrap and args.bootstrap < 20:
        raise CliError("--bootstrap must be 0 (no bootstrap) or >= 20")
    stats = sufficient_stats(data)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lam = ml_estimate(stats, args.wishart_df).lambda_hat
    rng = RngStream(args.seed)
    if args.bootstrap:
        res = gof_wishart_bootstrap(data.theta2(), args.wishart_df, lam, args.bootstrap, rng,
                                    bins=args.bins)
    else:
        res = gof_wishart(data.theta2(), args.wishart_df, lam, rng, bins=args.bins)
    out = {"wishart": res.to_dict(), "lambda_hat": lam.tolist()}
    try:
        out["mardia"] = [r.to_dict() for r in mardia_test(data.theta1())]
    except (ValueError, NumericalError) as exc:
        out["mardia"] = {"error": str(exc)}
    return _dump(out)


def cmd_risk(args) -> str:
    if args.reps < 2:
        raise CliError(f"--reps must be >= 2, got {args.reps}")
    truth = scenario_preset(args.scenario)
    if args.n <= truth.p:
        raise CliError(f"--n must exceed p = {truth.p}")
    return _dump(risk_comparison(truth, args.n, args.reps, RngStream(args.seed)))


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _level(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="interval-stats",
        description="ML and Bayesian inference for multivariate interval-valued data. "
                    "FILE may be a CSV path or one of the bundled names medical.csv, cars.csv.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", help="symbolic means, variances and covariances")
    p.add_argument("file")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("estimate", help="ML and/or Bayes estimates of (mu, Sigma, Lambda)")
    p.add_argument("file")
    p.add_argument("--wishart-df", type=float, required=True, help="Wishart degrees of freedom m")
    p.add_argument("--method", choices=("ml", "bayes", "both"), default="both")
    p.add_argument("--ci", type=_level, default=None, metavar="LEVEL",
                   help="add Wald intervals for (mu, Sigma) at this level")
    p.add_argument("--out", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="Monte Carlo comparison of the estimators")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--config", help="JSON document with scenario/truth/n/reps/seed")
    p.add_argument("--n", type=_pos_int)
    p.add_argument("--reps", type=_pos_int, default=DEFAULT_REPS)
    p.add_argument("--full-scale", action="store_true",
                   help=f"use {FULL_SCALE_REPS} replications")
    p.add_argument("--seed", type=_nonneg_int, default=None)
    p.add_argument("--out", choices=("json", "csv", "text"), default="json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gof", help="Wishart goodness of fit and Mardia normality test")
    p.add_argument("file")
    p.add_argument("--wishart-df", type=float, required=True)
    p.add_argument("--bootstrap", type=_nonneg_int, default=0, metavar="B",
                   help="bootstrap iterations (0 = single simulated reference sample)")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--bins", type=_pos_int, default=None)
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("risk", help="Monte Carlo entropy-loss risk, ML vs Bayes")
    p.add_argument("--scenario", choices=SCENARIOS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.set_defaults(func=cmd_risk)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        print(args.func(args))
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
