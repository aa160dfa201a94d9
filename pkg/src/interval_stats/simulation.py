"""Monte Carlo comparison of the ML and Bayes estimators.

Each replication draws ``n`` midpoint vectors from ``N_p(mu, Sigma)`` and ``n``
spread matrices from ``W_p(m, Lambda)``, applies both estimators and records
every parameter entry.  The report holds the mean and standard deviation of
each entry over the replications.

Scenario ``I`` is univariate and draws the spreads from an exponential with
mean ``lambda``.  Its ``lambda`` row uses ``sum(theta2) / n`` for ML and that
value times ``n m / (n m - 2)`` for Bayes; the extra ``lambda_reduced`` row
reports ``sum(theta2) / n`` for both estimators.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import map_indexed
from .distributions import RngStream, WishartParams, mvn_sample, wishart_sample
from .estimation import ModelParams
from .exceptions import DomainError

SCENARIOS = ("I", "II", "III")
ESTIMATORS = ("ML", "Bayes")
DEFAULT_REPS = 2_000
FULL_SCALE_REPS = 10_000


def scenario_preset(tag: str) -> ModelParams:
    """Truth for the three built-in scenarios (``p = 1, 2, 3``)."""
    if tag == "I":
        return ModelParams(mu=[2.0], sigma=[[5.0]], lam=[[2.0]], m=3)
    if tag == "II":
        return ModelParams(mu=[2.0, 4.0], sigma=[[4.0, 3.0], [3.0, 9.0]],
                           lam=[[2.0, 1.0], [1.0, 5.0]], m=3)
    if tag == "III":
        return ModelParams(mu=[2.0, 4.0, 6.0],
                           sigma=[[1.0, 1.4, 0.6], [1.4, 4.0, 1.5], [0.6, 1.5, 9.0]],
                           lam=[[2.0, 1.0, 1.0], [1.0, 5.0, 2.0], [1.0, 2.0, 3.0]], m=3)
    raise DomainError(f"unknown scenario {tag!r}; choose from {SCENARIOS}")


@dataclass
class SimulationConfig:
    scenario: str
    truth: ModelParams
    n: int
    reps: int = DEFAULT_REPS
    seed: int = 0
    estimators: tuple[str, ...] = ESTIMATORS

    def __post_init__(self):
        self.estimators = tuple(self.estimators)
        if self.scenario not in SCENARIOS + ("custom",):
            raise DomainError(f"unknown scenario {self.scenario!r}")
        if self.reps < 1:
            raise DomainError(f"reps must be >= 1, got {self.reps}")
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad or not self.estimators:
            raise DomainError(f"estimators must be a non-empty subset of {ESTIMATORS}")
        p = self.truth.p
        if "Bayes" in self.estimators:
            if self.n < p + 1:
                raise DomainError(f"Bayes Sigma needs n >= p + 1 = {p + 1}, got n = {self.n}")
            if self.n * self.truth.m <= p + 1:
                raise DomainError("Bayes Lambda needs n m > p + 1")
        if self.scenario == "I" and p != 1:
            raise DomainError("scenario I is univariate")

    @classmethod
    def preset(cls, scenario: str, n: int, reps: int = DEFAULT_REPS, seed: int = 0,
               estimators=ESTIMATORS) -> SimulationConfig:
        return cls(scenario, scenario_preset(scenario), n, reps, seed, tuple(estimators))

    @classmethod
    def from_dict(cls, d: dict) -> SimulationConfig:
        scenario = d.get("scenario", "custom")
        if "truth" in d:
            t = d["truth"]
            truth = ModelParams(t["mu"], t["sigma"], t["lambda"], t["m"])
        else:
            truth = scenario_preset(scenario)
        return cls(scenario, truth, int(d["n"]), int(d.get("reps", DEFAULT_REPS)),
                   int(d.get("seed", 0)), tuple(d.get("estimators", ESTIMATORS)))

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "truth": self.truth.to_dict(), "n": self.n,
                "reps": self.reps, "seed": self.seed, "estimators": list(self.estimators)}


@dataclass
class SimulationReport:
    """Rows of ``{parameter, estimator, mean, sd}``; ``sd`` is ``None`` when
    ``reps == 1`` (flag ``sd_undefined``)."""

    rows: list[dict]
    config: dict
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"config": self.config, "flags": list(self.flags), "rows": self.rows}

    @classmethod
    def from_dict(cls, d: dict) -> SimulationReport:
        return cls([dict(r) for r in d["rows"]], d["config"], list(d.get("flags", [])))

    def value(self, parameter: str, estimator: str) -> dict:
        for r in self.rows:
            if r["parameter"] == parameter and r["estimator"] == estimator:
                return r
        raise KeyError((parameter, estimator))


def parameter_names(p: int, scenario: str = "custom") -> list[str]:
    """Row labels: means, variances, covariances, then Lambda (upper triangle)."""
    if p == 1:
        names = ["mu", "sigma2", "lambda"]
        return names + ["lambda_reduced"] if scenario == "I" else names
    names = [f"mu_{i + 1}" for i in range(p)]
    names += [f"sigma2_{i + 1}" for i in range(p)]
    names += [f"sigma_{i + 1}{j + 1}" for i in range(p) for j in range(i + 1, p)]
    names += [f"lambda_{i + 1}{j + 1}" for i in range(p) for j in range(i, p)]
    return names


def _flatten(mu, sigma, lam, p):
    iu = np.triu_indices(p, 1)
    il = np.triu_indices(p)
    return np.concatenate([mu, np.diag(sigma), sigma[iu], lam[il]])


def _replicate(config: SimulationConfig, r: int) -> np.ndarray:
    """All estimates of replication ``r``, shape ``(len(estimators), k)``."""
    truth = config.truth
    p, n, m = truth.p, config.n, truth.m
    gen = RngStream(config.seed, r).generator
    theta1 = mvn_sample(truth.mu, truth.sigma, gen, size=n)
    if config.scenario == "I":
        theta2_sum = np.array([[gen.exponential(truth.lam[0, 0], size=n).sum()]])
    else:
        theta2_sum = wishart_sample(WishartParams(m, truth.lam), gen, size=n).sum(axis=0)
    mu = theta1.mean(axis=0)
    dev = theta1 - mu
    s = dev.T @ dev
    out = []
    for est in config.estimators:
        sig_div = n if est == "ML" else n - p
        if config.scenario == "I":
            lam = theta2_sum / n
            if est == "Bayes":
                lam = lam * (n * m) / (n * m - p - 1)
            row = np.concatenate([_flatten(mu, s / sig_div, lam, p), (theta2_sum / n).ravel()])
        else:
            lam_div = n * m if est == "ML" else n * m - p - 1
            row = _flatten(mu, s / sig_div, theta2_sum / lam_div, p)
        out.append(row)
    return np.array(out)


def run_scenario(config: SimulationConfig, workers: int | None = None) -> SimulationReport:
    """Run all replications and aggregate per-entry mean and SD.

    Replication ``r`` uses ``RngStream(seed, r)``, so the report is identical
    for any number of workers and earlier replications are unaffected by
    raising ``reps``.
    """
    draws = np.array(map_indexed(lambda r: _replicate(config, r), config.reps, workers))
    names = parameter_names(config.truth.p, config.scenario)
    rows, flags = [], []
    if config.reps == 1:
        flags.append("sd_undefined")
    for k, name in enumerate(names):
        for e, est in enumerate(config.estimators):
            x = draws[:, e, k]
            mean = math.fsum(x) / x.size
            sd = math.sqrt(math.fsum((x - mean) ** 2) / (x.size - 1)) if x.size > 1 else None
            rows.append({"parameter": name, "estimator": est, "mean": mean, "sd": sd})
    return SimulationReport(rows, config.to_dict(), flags)


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------

CSV_HEADER = ("parameter", "estimator", "mean", "sd")
_TEXT_LABELS = {"mu": "mu", "sigma2": "sigma^2", "lambda": "lambda",
                "lambda_reduced": "lambda (sum/n)"}


def _fmt(x):
    return "NA" if x is None else f"{x:.7g}"


def emit_table(report: SimulationReport, fmt: str = "json") -> str:
    """Serialise a report as ``json``, ``csv`` or a ``text`` table laid out
    as parameter rows with one ``mean (SD: sd)`` column per estimator."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2)
    if fmt == "csv":
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in report.rows:
            w.writerow([r["parameter"], r["estimator"],
                        repr(r["mean"]), "" if r["sd"] is None else repr(r["sd"])])
        return out.getvalue()
    if fmt == "text":
        estimators = list(dict.fromkeys(r["estimator"] for r in report.rows))
        params = list(dict.fromkeys(r["parameter"] for r in report.rows))
        cells = {(r["parameter"], r["estimator"]): f"{_fmt(r['mean'])} (SD: {_fmt(r['sd'])})"
                 for r in report.rows}
        heads = ["Parameter"] + ["MLE" if e == "ML" else "Bayesian" for e in estimators]
        body = [[_TEXT_LABELS.get(p, p)] + [cells[(p, e)] for e in estimators] for p in params]
        widths = [max(len(row[c]) for row in [heads] + body) for c in range(len(heads))]
        cfg = report.config
        lines = [f"Scenario {cfg['scenario']}, n = {cfg['n']}, reps = {cfg['reps']}, "
                 f"seed = {cfg['seed']}"]
        lines.append("  ".join(h.ljust(w) for h, w in zip(heads, widths)).rstrip())
        lines.append("-" * len(lines[-1]))
        lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in body]
        return "\n".join(lines) + "\n"
    raise DomainError(f"unknown format {fmt!r}; choose json, csv or text")
