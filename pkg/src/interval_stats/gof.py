"""Goodness-of-fit checks for the two halves of the model.

* :func:`mardia_test` - multivariate normality of the midpoint vectors.
* :func:`gof_wishart` - binned two-sample chi-squared comparison of the
  observed spread matrices against draws from ``W_p(df, Lambda_hat)``.
* :func:`gof_wishart_bootstrap` - the same statistic recomputed on bootstrap
  resamples, with a rank p-value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from ._parallel import map_indexed
from .distributions import RngStream, WishartParams, as_generator, wishart_sample
from .estimation import vech_indices
from .exceptions import DomainError, NumericalError


@dataclass
class GofResult:
    statistic: float
    p_value: float
    method: str
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"method": self.method, "statistic": self.statistic,
                "p_value": self.p_value, "config": self.config}


# --------------------------------------------------------------------------
# Mardia
# --------------------------------------------------------------------------

def mardia_test(theta1) -> tuple[GofResult, GofResult]:
    """Mardia's multivariate skewness and kurtosis tests.

    Skewness ``b1`` enters as ``n b1 / 6 ~ chi2(p(p+1)(p+2)/6)``; kurtosis
    ``b2`` as ``(b2 - p(p+2)) / sqrt(8 p (p+2) / n) ~ N(0, 1)`` (two-sided).
    The sample covariance uses divisor ``n``.
    """
    x = np.asarray(theta1, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, p = x.shape
    if n <= p:
        raise DomainError(f"Mardia's test needs n > p (n = {n}, p = {p})")
    dev = x - x.mean(axis=0)
    cov = dev.T @ dev / n
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise NumericalError("sample covariance is singular") from None
    if np.min(np.diag(chol)) ** 2 <= 1e-12 * np.max(np.diag(cov)):
        raise NumericalError("sample covariance is singular")
    z = linalg.solve_triangular(chol, dev.T, lower=True).T
    # sum_ij (z_i . z_j)^3 == ||sum_i z_i (x) z_i (x) z_i||^2, avoids the n x n matrix
    t3 = np.einsum("ia,ib,ic->abc", z, z, z)
    b1 = float(np.sum(t3 * t3)) / n**2
    b2 = float(np.mean(np.sum(z * z, axis=1) ** 2))

    skew_stat = n * b1 / 6
    skew_df = p * (p + 1) * (p + 2) / 6
    skew = GofResult(skew_stat, float(stats.chi2.sf(skew_stat, skew_df)), "mardia-skew",
                     {"n": n, "p": p, "b1p": b1, "df": skew_df})
    kurt_stat = (b2 - p * (p + 2)) / math.sqrt(8 * p * (p + 2) / n)
    kurt = GofResult(kurt_stat, float(2 * stats.norm.sf(abs(kurt_stat))), "mardia-kurt",
                     {"n": n, "p": p, "b2p": b2})
    return skew, kurt


# --------------------------------------------------------------------------
# Binned two-sample chi-squared
# --------------------------------------------------------------------------

def default_bins(n: int) -> int:
    return max(2, math.isqrt(n))


def chisq_two_sample(sample_a, sample_b, bins: int) -> tuple[float, int, float]:
    """Chi-squared homogeneity test on equiprobable pooled-quantile bins.

    Bin edges are the ``k / bins`` quantiles of the pooled sample; a value
    equal to an edge falls in the lower bin.  Bins empty in both samples are
    dropped, and the degrees of freedom are ``(non-empty bins) - 1``.

    Returns ``(statistic, df, p_value)``.
    """
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise DomainError("both samples must be non-empty")
    if bins < 2:
        raise DomainError(f"bins must be >= 2, got {bins}")
    pooled = np.concatenate([a, b])
    if np.ptp(pooled) == 0:
        raise DomainError("degenerate pooled sample (all values equal)")
    edges = np.quantile(pooled, np.arange(1, bins) / bins)
    ca = np.bincount(np.searchsorted(edges, a, side="left"), minlength=bins)
    cb = np.bincount(np.searchsorted(edges, b, side="left"), minlength=bins)
    total = ca + cb
    keep = total > 0
    ca, cb, total = ca[keep], cb[keep], total[keep]
    dof = int(keep.sum()) - 1
    if dof < 1:
        return 0.0, 0, 1.0
    n_all = a.size + b.size
    ea = a.size * total / n_all
    eb = b.size * total / n_all
    stat = float(np.sum((ca - ea) ** 2 / ea) + np.sum((cb - eb) ** 2 / eb))
    return stat, dof, float(stats.chi2.sf(stat, dof))


def _half_vectorise(mats: np.ndarray) -> np.ndarray:
    p = mats.shape[-1]
    rows, cols = zip(*vech_indices(p))
    return mats[:, list(rows), list(cols)]


def _check_observed(observed, df, lambda_hat):
    obs = np.asarray(observed, dtype=float)
    if obs.ndim == 1:
        obs = obs[:, None, None]
    if obs.ndim != 3 or obs.shape[1] != obs.shape[2]:
        raise DomainError(f"observed must be a stack of square matrices, got {obs.shape}")
    n, p, _ = obs.shape
    if n < 5:
        raise DomainError(f"insufficient observations: n = {n} < 5")
    if df < p:
        raise DomainError(f"df must be >= p = {p}, got {df}")
    return obs, WishartParams(df, np.atleast_2d(lambda_hat))


def _statistic(obs_vech, sim_vech, bins, warn=True):
    total, dof, skipped = 0.0, 0, []
    for c in range(obs_vech.shape[1]):
        a, b = obs_vech[:, c], sim_vech[:, c]
        if np.ptp(np.concatenate([a, b])) == 0:
            skipped.append(c)
            if warn:
                warnings.warn(f"coordinate {c} is constant; skipped", RuntimeWarning, stacklevel=3)
            continue
        s, d, _ = chisq_two_sample(a, b, bins)
        total += s
        dof += d
    return total, dof, skipped


def gof_wishart(observed, df: float, lambda_hat, rng: RngStream,
                bins: int | None = None) -> GofResult:
    """Wishart goodness of fit (single simulated reference sample).

    Simulates ``n`` draws from ``W_p(df, lambda_hat)``, half-vectorises the
    observed and simulated matrices and sums the per-coordinate two-sample
    chi-squared statistics.  The p-value is from ``chi2`` with the summed
    degrees of freedom.  Constant coordinates are skipped with a warning.
    """
    obs, params = _check_observed(observed, df, lambda_hat)
    n, p, _ = obs.shape
    bins = default_bins(n) if bins is None else int(bins)
    sim = wishart_sample(params, as_generator(rng), size=n)
    stat, dof, skipped = _statistic(_half_vectorise(obs), _half_vectorise(sim), bins)
    pval = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return GofResult(stat, pval, "wishart-gof", {
        "df": df, "bins": bins, "n": n, "p": p, "chisq_df": dof,
        "skipped_coordinates": skipped, **_rng_config(rng)})


def gof_wishart_bootstrap(observed, df: float, lambda_hat, B: int, rng: RngStream,
                          bins: int | None = None, workers: int | None = None) -> GofResult:
    """Bootstrap version of :func:`gof_wishart`.

    ``T_obs`` is the statistic on the original matrices (reference draws from
    ``rng.spawn(0)``).  For ``b = 1..B`` the observed matrices are resampled
    with replacement and compared to fresh draws, both from ``rng.spawn(b)``.
    The p-value is ``(1 + #{T_b >= T_obs}) / (B + 1)``.
    """
    obs, params = _check_observed(observed, df, lambda_hat)
    if B < 20:
        raise DomainError(f"B must be >= 20, got {B}")
    if not isinstance(rng, RngStream):
        raise TypeError("gof_wishart_bootstrap needs an RngStream to derive per-iteration streams")
    n, p, _ = obs.shape
    bins = default_bins(n) if bins is None else int(bins)
    obs_vech = _half_vectorise(obs)

    sim0 = wishart_sample(params, rng.spawn(0).generator, size=n)
    t_obs, dof, skipped = _statistic(obs_vech, _half_vectorise(sim0), bins)

    def one(b):
        gen = rng.spawn(b + 1).generator
        idx = gen.integers(0, n, size=n)
        sim = wishart_sample(params, gen, size=n)
        return _statistic(obs_vech[idx], _half_vectorise(sim), bins, warn=False)[0]

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        t_boot = np.array(map_indexed(one, B, workers))
    pval = (1 + int(np.sum(t_boot >= t_obs))) / (B + 1)
    return GofResult(t_obs, pval, "wishart-gof-boot", {
        "df": df, "bins": bins, "B": B, "n": n, "p": p, "chisq_df": dof,
        "skipped_coordinates": skipped, **_rng_config(rng)})


def _rng_config(rng) -> dict:
    return rng.to_dict() if isinstance(rng, RngStream) else {}
