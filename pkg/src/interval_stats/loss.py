"""Loss functions and Monte Carlo risk of the covariance estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._parallel import map_indexed
from .distributions import RngStream, WishartParams, check_spd, mvn_sample, wishart_sample
from .estimation import ModelParams
from .exceptions import DomainError

ESTIMATORS = ("ML", "Bayes")
PARAMETERS = ("Sigma", "Lambda")


def l2_loss(mu, mu_hat) -> float:
    """Squared Euclidean distance ``||mu - mu_hat||^2``."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    mu_hat = np.atleast_1d(np.asarray(mu_hat, dtype=float))
    if mu.shape != mu_hat.shape:
        raise DomainError(f"length mismatch: {mu.shape} vs {mu_hat.shape}")
    d = mu - mu_hat
    return float(d @ d)


def entropy_loss(b_true, b_hat) -> float:
    """Stein's entropy loss ``tr(B_hat B^-1) - log|B_hat B^-1| - p``.

    Non-negative, zero only when ``b_hat == b_true``.  Log-determinants come
    from Cholesky factors; no explicit inverse is formed.
    """
    b_true = np.atleast_2d(np.asarray(b_true, dtype=float))
    b_hat = np.atleast_2d(np.asarray(b_hat, dtype=float))
    if b_true.shape != b_hat.shape:
        raise DomainError(f"dimension mismatch: {b_true.shape} vs {b_hat.shape}")
    lt = check_spd(b_true, "B")
    lh = check_spd(b_hat, "B_hat")
    p = b_true.shape[0]
    # tr(B^-1 B_hat) = ||L_t^-1 L_h||_F^2
    m = linalg.solve_triangular(lt, lh, lower=True)
    tr = float(np.sum(m * m))
    logdet = 2.0 * float(np.sum(np.log(np.diag(lh))) - np.sum(np.log(np.diag(lt))))
    return tr - logdet - p


def risk_gap_closed_form(n: int, m: float, p: int) -> tuple[float, float]:
    """Reference risk gaps ``(log(n/(n-1)), n m / (n m - p - 1))``.

    Kept for side-by-side comparison with Monte Carlo gaps; neither equals
    the exact risk difference in general.
    """
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if n * m <= p + 1:
        raise DomainError(f"n m = {n * m} must exceed p + 1 = {p + 1}")
    return math.log(n / (n - 1)), n * m / (n * m - p - 1)


@dataclass
class RiskReport:
    estimator: str
    parameter: str
    risk: float
    mc_se: float
    replications: int
    config: dict

    def to_dict(self) -> dict:
        return {"estimator": self.estimator, "parameter": self.parameter,
                "risk": self.risk, "mc_se": self.mc_se,
                "replications": self.replications, "config": self.config}


def _divisor(estimator: str, parameter: str, n: int, m: float, p: int) -> float:
    if parameter == "Sigma":
        return n if estimator == "ML" else n - p
    return n * m if estimator == "ML" else n * m - p - 1


def _check_args(estimators, parameter, truth, n, reps):
    if parameter not in PARAMETERS:
        raise DomainError(f"parameter must be one of {PARAMETERS}, got {parameter!r}")
    for e in estimators:
        if e not in ESTIMATORS:
            raise DomainError(f"estimator must be one of {ESTIMATORS}, got {e!r}")
    if reps < 2:
        raise DomainError(f"reps must be >= 2, got {reps}")
    p = truth.p
    if parameter == "Sigma" and n <= p:
        raise DomainError(f"Sigma estimators need n > p (n = {n}, p = {p})")
    if parameter == "Lambda" and n * truth.m <= p + 1:
        raise DomainError("Bayes Lambda needs n m > p + 1")


def replicate_losses(estimators, parameter: str, truth: ModelParams, n: int, reps: int,
                     rng: RngStream, workers: int | None = None) -> np.ndarray:
    """Entropy losses, shape ``(reps, len(estimators))``.

    Replication ``r`` draws its data from ``rng.spawn(r)``; every estimator
    sees the same datasets.  Only the block of the model relevant to
    ``parameter`` is simulated: midpoints for ``Sigma``, spread matrices for
    ``Lambda``.
    """
    estimators = tuple(estimators)
    _check_args(estimators, parameter, truth, n, reps)
    p, m = truth.p, truth.m
    target = truth.sigma if parameter == "Sigma" else truth.lam
    divisors = [_divisor(e, parameter, n, m, p) for e in estimators]
    wparams = WishartParams(m, truth.lam) if parameter == "Lambda" else None

    def one(r):
        gen = rng.spawn(r).generator
        if parameter == "Sigma":
            x = mvn_sample(truth.mu, truth.sigma, gen, size=n)
            dev = x - x.mean(axis=0)
            scatter = dev.T @ dev
        else:
            scatter = wishart_sample(wparams, gen, size=n).sum(axis=0)
        return [entropy_loss(target, scatter / d) for d in divisors]

    return np.array(map_indexed(one, reps, workers), dtype=float)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    k = x.size
    mean = math.fsum(x) / k
    var = math.fsum((x - mean) ** 2) / (k - 1)
    return mean, math.sqrt(var / k)


def _config(truth, n, reps, rng):
    return {"n": n, "p": truth.p, "m": truth.m, "truth": truth.to_dict(),
            "reps": reps, "seed": rng.seed, "stream": rng.stream}


def mc_risk(estimator: str, parameter: str, truth: ModelParams, n: int, reps: int,
            rng: RngStream, workers: int | None = None) -> RiskReport:
    """Monte Carlo entropy-loss risk of one estimator of ``Sigma`` or ``Lambda``.

    ``mc_se`` is the sample standard deviation of the losses over ``sqrt(reps)``.
    Results do not depend on ``workers``.
    """
    losses = replicate_losses([estimator], parameter, truth, n, reps, rng, workers)[:, 0]
    risk, se = _mean_se(losses)
    return RiskReport(estimator, parameter, risk, se, reps, _config(truth, n, reps, rng))


def risk_comparison(truth: ModelParams, n: int, reps: int, rng: RngStream,
                    workers: int | None = None) -> dict:
    """ML and Bayes risks for both matrices, the paired gap ``ML - Bayes``
    with its Monte Carlo standard error, and the reference closed forms."""
    delta_sigma, delta_lambda = risk_gap_closed_form(n, truth.m, truth.p)
    out = {"config": _config(truth, n, reps, rng), "parameters": {}}
    for parameter, closed in (("Sigma", delta_sigma), ("Lambda", delta_lambda)):
        losses = replicate_losses(ESTIMATORS, parameter, truth, n, reps, rng, workers)
        reports = {}
        for k, est in enumerate(ESTIMATORS):
            risk, se = _mean_se(losses[:, k])
            reports[est] = RiskReport(est, parameter, risk, se, reps, out["config"]).to_dict()
            del reports[est]["config"]
        gap, gap_se = _mean_se(losses[:, 0] - losses[:, 1])
        out["parameters"][parameter] = {
            "risks": reports, "gap_ml_minus_bayes": gap, "gap_mc_se": gap_se,
            "closed_form_gap": closed,
        }
    return out
