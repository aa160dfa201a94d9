"""Estimation for the normal-Wishart interval model.

The midpoint vectors ``theta1_i`` are modelled as iid ``N_p(mu, Sigma)`` and the
spread matrices ``theta2_i`` as iid ``W_p(m, Lambda)``, independent of each
other.  Everything the estimators need is in :class:`SufficientStats`.

Maximum likelihood::

    mu = mean(theta1),  Sigma = S / n,        Lambda = sum(theta2) / (n m)

Bayes (posterior means under the priors ``|Sigma|^-(p+2)/2`` and
``|Lambda|^-(p+1)/2``)::

    mu = mean(theta1),  Sigma = S / (n - p),  Lambda = sum(theta2) / (n m - p - 1)

``m`` is never estimated; the caller supplies it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg, stats as sps

from .distributions import (
    WishartParams, as_generator, check_spd, inverse_wishart_sample,
    mvn_sample, mvt_logpdf, wishart_logpdf,
)
from .exceptions import DomainError, EstimationError, NotPositiveDefiniteError
from .intervals import IntervalDataset, InternalRep


# --------------------------------------------------------------------------
# Containers
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SufficientStats:
    """``theta_bar`` (mean of theta1), centred scatter ``S``, ``theta2_sum`` and ``n``."""

    theta_bar: np.ndarray
    S: np.ndarray
    theta2_sum: np.ndarray
    n: int

    @property
    def p(self) -> int:
        return self.theta_bar.size


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Truth or estimate of ``(mu, Sigma, Lambda)`` with Wishart df ``m``."""

    mu: np.ndarray
    sigma: np.ndarray
    lam: np.ndarray
    m: float

    def __post_init__(self):
        object.__setattr__(self, "mu", np.atleast_1d(np.asarray(self.mu, dtype=float)))
        object.__setattr__(self, "sigma", np.atleast_2d(np.asarray(self.sigma, dtype=float)))
        object.__setattr__(self, "lam", np.atleast_2d(np.asarray(self.lam, dtype=float)))
        p = self.mu.size
        if self.sigma.shape != (p, p) or self.lam.shape != (p, p):
            raise DomainError("mu, sigma and lambda dimensions disagree")
        check_spd(self.sigma, "sigma")
        check_spd(self.lam, "lambda")
        if self.m < p:
            raise DomainError(f"Wishart df m must be >= p = {p}, got {self.m}")

    @property
    def p(self) -> int:
        return self.mu.size

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "sigma": self.sigma.tolist(),
                "lambda": self.lam.tolist(), "m": self.m}


@dataclass(frozen=True, eq=False)
class ParamEstimate:
    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    lambda_hat: np.ndarray
    method: str
    m_used: float
    flags: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        d = {"mu": self.mu_hat.tolist(), "sigma": self.sigma_hat.tolist(),
             "lambda": self.lambda_hat.tolist(), "method": self.method, "m": self.m_used}
        if self.flags:
            d["flags"] = list(self.flags)
        return d


# --------------------------------------------------------------------------
# Sufficient statistics and point estimators
# --------------------------------------------------------------------------

def _as_arrays(reps) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(reps, IntervalDataset):
        return reps.theta1(), reps.theta2()
    if isinstance(reps, tuple) and len(reps) == 2 and isinstance(reps[0], np.ndarray):
        return np.atleast_2d(reps[0]), np.asarray(reps[1])
    reps = list(reps)
    if not reps:
        raise EstimationError("no observations")
    p = np.atleast_1d(reps[0].theta1).size
    if any(np.atleast_1d(r.theta1).size != p for r in reps):
        raise DomainError("observations have different dimensions")
    t1 = np.array([np.atleast_1d(r.theta1) for r in reps], dtype=float)
    t2 = np.array([np.atleast_2d(r.theta2) for r in reps], dtype=float)
    return t1, t2


def sufficient_stats_from_arrays(theta1, theta2) -> SufficientStats:
    """Sufficient statistics from ``theta1`` ``(n, p)`` and ``theta2`` ``(n, p, p)``."""
    theta1 = np.asarray(theta1, dtype=float)
    if theta1.ndim == 1:
        theta1 = theta1[:, None]
    theta2 = np.asarray(theta2, dtype=float).reshape(theta1.shape[0], theta1.shape[1],
                                                      theta1.shape[1])
    n = theta1.shape[0]
    if n < 1:
        raise EstimationError("no observations")
    # two-pass: centre first, then accumulate the scatter
    theta_bar = theta1.mean(axis=0)
    dev = theta1 - theta_bar
    s = dev.T @ dev
    s = 0.5 * (s + s.T)
    return SufficientStats(theta_bar, s, theta2.sum(axis=0), n)


def sufficient_stats(reps: Sequence[InternalRep] | IntervalDataset) -> SufficientStats:
    """Sufficient statistics of a list of :class:`InternalRep` (or a dataset)."""
    return sufficient_stats_from_arrays(*_as_arrays(reps))


def _check_m(m, p):
    if m < p:
        raise DomainError(f"Wishart df m must be >= p = {p}, got {m}")


def ml_estimate(stats: SufficientStats, m: float) -> ParamEstimate:
    """Maximum likelihood estimates.

    With ``n = 1`` (or any rank-deficient scatter) ``Sigma`` is singular; the
    estimate is still returned but carries the ``sigma_singular`` flag.
    """
    _check_m(m, stats.p)
    n = stats.n
    sigma = stats.S / n
    flags = ()
    if n <= stats.p or np.linalg.matrix_rank(stats.S) < stats.p:
        flags = ("sigma_singular",)
        warnings.warn("ML estimate of Sigma is singular", RuntimeWarning, stacklevel=2)
    return ParamEstimate(stats.theta_bar.copy(), sigma, stats.theta2_sum / (n * m),
                         "ML", m, flags)


def bayes_estimate(stats: SufficientStats, m: float) -> ParamEstimate:
    """Posterior-mean (Bayes) estimates; needs ``n > p`` and ``n m > p + 1``."""
    _check_m(m, stats.p)
    n, p = stats.n, stats.p
    if n <= p:
        raise EstimationError(f"posterior mean of Sigma undefined for n = {n} <= p = {p}")
    if n * m <= p + 1:
        raise EstimationError(f"posterior mean of Lambda undefined for n m = {n * m} <= p + 1")
    return ParamEstimate(stats.theta_bar.copy(), stats.S / (n - p),
                         stats.theta2_sum / (n * m - p - 1), "Bayes", m)


def estimate(stats: SufficientStats, m: float, method: str) -> ParamEstimate:
    if method.lower() == "ml":
        return ml_estimate(stats, m)
    if method.lower() == "bayes":
        return bayes_estimate(stats, m)
    raise DomainError(f"unknown method {method!r}")


# --------------------------------------------------------------------------
# Likelihoods
# --------------------------------------------------------------------------

def log_likelihood_L1(mu, sigma, theta1) -> float:
    """Normal log-likelihood of the midpoint vectors, including ``2 pi`` terms."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    theta1 = np.asarray(theta1, dtype=float).reshape(-1, mu.size)
    chol = check_spd(np.atleast_2d(sigma), "sigma")
    n, p = theta1.shape
    z = linalg.solve_triangular(chol, (theta1 - mu).T, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(-0.5 * (n * p * math.log(2 * math.pi) + n * logdet + np.sum(z * z)))


def log_likelihood_L2(lam, m: float, theta2) -> float:
    """Wishart log-likelihood of the spread matrices with the full normaliser.

    Each ``theta2_i`` must be positive definite (true for Wishart draws with
    ``m >= p``, not for the rank-one matrices of real interval data).
    """
    params = WishartParams(m, lam)
    theta2 = np.asarray(theta2, dtype=float).reshape(-1, params.p, params.p)
    return math.fsum(wishart_logpdf(t, params) for t in theta2)


# --------------------------------------------------------------------------
# Fisher information and Wald intervals
# --------------------------------------------------------------------------

def vech_indices(p: int) -> list[tuple[int, int]]:
    """``(i, j)`` pairs, ``i >= j``, in column-major half-vectorisation order."""
    return [(i, j) for j in range(p) for i in range(j, p)]


def vech(a) -> np.ndarray:
    a = np.atleast_2d(a)
    return np.array([a[i, j] for i, j in vech_indices(a.shape[0])])


def unvech(v, p: int) -> np.ndarray:
    a = np.zeros((p, p))
    for x, (i, j) in zip(v, vech_indices(p)):
        a[i, j] = a[j, i] = x
    return a


def duplication_matrix(p: int) -> np.ndarray:
    """``D`` with ``vec(A) = D vech(A)`` for symmetric ``A`` (column-major vec)."""
    idx = vech_indices(p)
    d = np.zeros((p * p, len(idx)))
    for k, (i, j) in enumerate(idx):
        d[j * p + i, k] = 1.0
        d[i * p + j, k] = 1.0
    return d


@dataclass(frozen=True, eq=False)
class FisherInfo:
    """Per-observation Fisher information for ``(mu, vech(Sigma))``.

    ``ordering`` labels the rows: ``mu_1..mu_p`` then ``sigma_ij`` (``i >= j``)
    in vech order.
    """

    matrix: np.ndarray
    ordering: tuple[str, ...]


def fisher_information(mu, sigma) -> FisherInfo:
    """Gaussian information: ``Sigma^-1`` for the mean block and
    ``1/2 D^T (Sigma^-1 kron Sigma^-1) D`` for the covariance block; the
    cross block is zero."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    chol = check_spd(sigma, "sigma")
    p = mu.size
    sinv = linalg.cho_solve((chol, True), np.eye(p))
    sinv = 0.5 * (sinv + sinv.T)
    d = duplication_matrix(p)
    q = p * (p + 3) // 2
    info = np.zeros((q, q))
    info[:p, :p] = sinv
    info[p:, p:] = 0.5 * d.T @ np.kron(sinv, sinv) @ d
    labels = tuple(f"mu_{i + 1}" for i in range(p)) + tuple(
        f"sigma_{i + 1}{j + 1}" for i, j in vech_indices(p))
    return FisherInfo(info, labels)


def fisher_information_bivariate(mu, sigma1_sq, sigma2_sq, rho) -> np.ndarray:
    """Information in the ``(mu_1, mu_2, sigma_1^2, sigma_2^2, rho)`` layout.

    Obtained from :func:`fisher_information` by the chain rule,
    ``J^T I J`` with ``J`` the Jacobian of ``(mu, vech Sigma)``.
    """
    s1, s2 = math.sqrt(sigma1_sq), math.sqrt(sigma2_sq)
    cov = rho * s1 * s2
    sigma = np.array([[sigma1_sq, cov], [cov, sigma2_sq]])
    info = fisher_information(mu, sigma).matrix
    # vech order: s11, s21, s22
    jac = np.zeros((5, 5))
    jac[0, 0] = jac[1, 1] = 1.0
    jac[2, 2] = 1.0                              # d s11 / d sigma1^2
    jac[3, 2] = rho * s2 / (2 * s1)              # d s21 / d sigma1^2
    jac[3, 3] = rho * s1 / (2 * s2)              # d s21 / d sigma2^2
    jac[3, 4] = s1 * s2                          # d s21 / d rho
    jac[4, 3] = 1.0                              # d s22 / d sigma2^2
    return jac.T @ info @ jac


@dataclass(frozen=True)
class WaldInterval:
    parameter: str
    estimate: float
    lower: float
    upper: float
    std_error: float


def asymptotic_ci(estimate: ParamEstimate, stats: SufficientStats,
                  level: float = 0.95) -> list[WaldInterval]:
    """Wald intervals ``omega_k +/- z sqrt([I^-1]_kk / n)`` for ``(mu, vech Sigma)``.

    The information is evaluated at the estimate's ``(mu, Sigma)``.
    """
    if not 0 < level < 1:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    try:
        fi = fisher_information(estimate.mu_hat, estimate.sigma_hat)
    except NotPositiveDefiniteError as exc:
        raise EstimationError(f"Fisher information is singular: {exc}") from exc
    cov = np.linalg.inv(fi.matrix) / stats.n
    z = sps.norm.ppf(0.5 + level / 2)
    omega = np.concatenate([estimate.mu_hat, vech(estimate.sigma_hat)])
    se = np.sqrt(np.diag(cov))
    return [WaldInterval(name, float(w), float(w - z * s), float(w + z * s), float(s))
            for name, w, s in zip(fi.ordering, omega, se)]


# --------------------------------------------------------------------------
# Posterior: marginal of mu and Gibbs full conditionals
# --------------------------------------------------------------------------

def posterior_mu_logpdf(x, stats: SufficientStats):
    """Marginal posterior of ``mu``: Student-t with location ``theta_bar``,
    scale ``S / (n + p + 1)`` and ``n + 1 - p`` degrees of freedom."""
    n, p = stats.n, stats.p
    return mvt_logpdf(x, stats.theta_bar, stats.S / (n + p + 1), n + 1 - p)


def gibbs_mu(sigma, stats: SufficientStats, rng) -> np.ndarray:
    """``mu | Sigma ~ N_p(theta_bar, Sigma / n)``."""
    return mvn_sample(stats.theta_bar, np.atleast_2d(sigma) / stats.n, rng)


def gibbs_sigma(mu, theta1, rng) -> np.ndarray:
    """``Sigma | mu ~ IW_p(n + 1, sum_i (theta1_i - mu)(theta1_i - mu)^T)``."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    theta1 = np.asarray(theta1, dtype=float).reshape(-1, mu.size)
    dev = theta1 - mu
    scale = dev.T @ dev
    try:
        return inverse_wishart_sample(theta1.shape[0] + 1, 0.5 * (scale + scale.T), rng)
    except NotPositiveDefiniteError as exc:
        raise EstimationError(f"conditional scale of Sigma is rank deficient: {exc}") from exc


def gibbs_lambda(stats: SufficientStats, m: float, rng, size: int | None = None) -> np.ndarray:
    """``Lambda | theta2 ~ IW_p(n m, sum_i theta2_i)``."""
    try:
        return inverse_wishart_sample(stats.n * m, stats.theta2_sum, rng, size=size)
    except NotPositiveDefiniteError as exc:
        raise EstimationError(f"conditional scale of Lambda is rank deficient: {exc}") from exc


def gibbs_chain(theta1, n_iter: int, rng, burn_in: int = 0, sigma0=None):
    """Two-block Gibbs sampler over ``(mu, Sigma)``.

    Alternates :func:`gibbs_mu` and :func:`gibbs_sigma`, starting from
    ``sigma0`` (default ``S / n``).  Returns arrays of the retained ``mu`` draws
    ``(n_iter, p)`` and ``Sigma`` draws ``(n_iter, p, p)``.
    """
    theta1 = np.asarray(theta1, dtype=float)
    if theta1.ndim == 1:
        theta1 = theta1[:, None]
    st = sufficient_stats_from_arrays(theta1, np.zeros((theta1.shape[0],) + (theta1.shape[1],) * 2))
    gen = as_generator(rng)
    sigma = st.S / st.n if sigma0 is None else np.atleast_2d(sigma0)
    p = st.p
    mus = np.empty((n_iter, p))
    sigmas = np.empty((n_iter, p, p))
    for it in range(burn_in + n_iter):
        mu = gibbs_mu(sigma, st, gen)
        sigma = gibbs_sigma(mu, theta1, gen)
        if it >= burn_in:
            mus[it - burn_in] = mu
            sigmas[it - burn_in] = sigma
    return mus, sigmas


# --------------------------------------------------------------------------
# Bivariate convenience form
# --------------------------------------------------------------------------

def bivariate_ml(reps, m: float) -> dict[str, float]:
    """ML estimates for ``p = 2`` as named scalars, including the correlation
    ``rho = S_12 / sqrt(S_11 S_22)``."""
    st = sufficient_stats(reps)
    if st.p != 2:
        raise DomainError(f"bivariate_ml needs p = 2, got p = {st.p}")
    s = st.S
    if s[0, 0] <= 0 or s[1, 1] <= 0:
        raise EstimationError("rho undefined: zero variance in a coordinate")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        est = ml_estimate(st, m)
    return {
        "mu1": float(est.mu_hat[0]),
        "mu2": float(est.mu_hat[1]),
        "sigma1_sq": float(est.sigma_hat[0, 0]),
        "sigma2_sq": float(est.sigma_hat[1, 1]),
        "rho": float(s[0, 1] / math.sqrt(s[0, 0] * s[1, 1])),
        "lambda11": float(est.lambda_hat[0, 0]),
        "lambda22": float(est.lambda_hat[1, 1]),
        "lambda12": float(est.lambda_hat[0, 1]),
    }


# --------------------------------------------------------------------------
# Normalising transforms
# --------------------------------------------------------------------------

KAPPA_RANGE = (-3.0, 3.0)


def _check_positive(value):
    v = np.asarray(value, dtype=float)
    if np.any(v <= 0) or np.any(~np.isfinite(v)):
        raise DomainError("transform needs positive finite values")
    return v


def boxcox(value, kappa: float):
    """``(v^k - 1) / k``, or ``log v`` at ``k = 0``."""
    v = _check_positive(value)
    if kappa == 0:
        out = np.log(v)
    else:
        # expm1 keeps the small-kappa limit accurate
        out = np.expm1(kappa * np.log(v)) / kappa
    return float(out) if np.ndim(out) == 0 else out


def power_transform(value, kappa: float):
    """``v^k``, or ``log v`` at ``k = 0``."""
    v = _check_positive(value)
    out = np.log(v) if kappa == 0 else v ** kappa
    return float(out) if np.ndim(out) == 0 else out


def boxcox_profile_loglik(values, kappa: float) -> float:
    """Normal profile log-likelihood of the Box-Cox transformed sample,
    including the Jacobian ``(k - 1) sum log v``."""
    v = _check_positive(values)
    y = np.asarray(boxcox(v, kappa))
    n = v.size
    return float(-n / 2 * math.log(np.var(y)) + (kappa - 1) * np.sum(np.log(v)))


def boxcox_optimal_kappa(values: Iterable[float], step: float = 0.01) -> float:
    """Grid search for the Box-Cox exponent over the open interval (-3, 3)."""
    v = _check_positive(list(values))
    lo, hi = KAPPA_RANGE
    k = int(round((hi - lo) / step))
    grid = np.round(lo + step * np.arange(1, k), 10)
    ll = [boxcox_profile_loglik(v, kap) for kap in grid]
    return float(grid[int(np.argmax(ll))])
