"""Matrix distributions: multivariate normal and Student-t, Wishart and
inverse Wishart.

Densities are evaluated through Cholesky factors; samplers draw from
:class:`RngStream`, a counter-based (Philox) generator keyed by
``(seed, stream)`` so that independent replications can be seeded
reproducibly and in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from .exceptions import DomainError, NotPositiveDefiniteError

_LOG_2 = math.log(2.0)
_LOG_PI = math.log(math.pi)

SYMMETRY_RTOL = 1e-10
PIVOT_RTOL = 1e-12


# --------------------------------------------------------------------------
# Random streams
# --------------------------------------------------------------------------

@dataclass
class RngStream:
    """Reproducible random stream identified by ``(seed, stream)``.

    Both ids are 64-bit unsigned integers and together form the 128-bit
    Philox key, so the draw sequence depends on nothing else.  One stream
    must not be shared between threads; use :meth:`spawn` to derive
    independent children instead.
    """

    seed: int
    stream: int = 0
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.seed = int(self.seed)
        self.stream = int(self.stream)
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not 0 <= v < 2**64:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {v}")
        key = self.seed | (self.stream << 64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def spawn(self, index: int) -> RngStream:
        """Child stream for task ``index``; depends only on (seed, stream, index)."""
        ss = np.random.SeedSequence([self.seed, self.stream, int(index)])
        return RngStream(self.seed, int(ss.generate_state(1, np.uint64)[0]))

    def to_dict(self) -> dict:
        return {"seed": self.seed, "stream": self.stream}


def as_generator(rng) -> np.random.Generator:
    """Accept an :class:`RngStream`, a numpy ``Generator`` or an int seed."""
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator
    raise TypeError(f"expected RngStream, Generator or int, got {type(rng).__name__}")


# --------------------------------------------------------------------------
# Positive-definite helpers
# --------------------------------------------------------------------------

def check_spd(a, name: str = "matrix") -> np.ndarray:
    """Validate a symmetric positive-definite matrix and return its lower
    Cholesky factor.

    Symmetry is checked to ``1e-10`` relative to the largest entry; a pivot
    ``L_ii^2`` below ``1e-12 * max(diag(a))`` counts as a failure.  Nothing is
    clamped.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotPositiveDefiniteError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefiniteError(f"{name} has non-finite entries")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_RTOL * scale:
        raise NotPositiveDefiniteError(f"{name} is not symmetric")
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(f"{name} is not positive definite") from None
    maxdiag = np.max(np.diag(a))
    if maxdiag <= 0 or np.min(np.diag(chol)) ** 2 <= PIVOT_RTOL * maxdiag:
        raise NotPositiveDefiniteError(f"{name} is numerically singular")
    return chol


def _logdet_from_chol(chol: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def _trace_inv_product(chol: np.ndarray, b: np.ndarray) -> float:
    """``tr(M^-1 B)`` where ``chol`` factors ``M``."""
    return float(np.trace(linalg.cho_solve((chol, True), b)))


# --------------------------------------------------------------------------
# Special functions
# --------------------------------------------------------------------------

def multigamma_log(p: int, z: float) -> float:
    """Log of the multivariate gamma function ``Gamma_p(z)``.

    ``log Gamma_p(z) = p(p-1)/4 log(pi) + sum_{i=1..p} log Gamma(z + (1-i)/2)``,
    defined for ``z > (p-1)/2``.
    """
    if p < 1:
        raise DomainError(f"dimension must be >= 1, got {p}")
    if not z > (p - 1) / 2:
        raise DomainError(f"multigamma_log needs z > (p-1)/2 = {(p - 1) / 2}, got {z}")
    i = np.arange(1, p + 1)
    return p * (p - 1) / 4 * _LOG_PI + float(np.sum(gammaln(z + (1 - i) / 2)))


# --------------------------------------------------------------------------
# Wishart / inverse Wishart
# --------------------------------------------------------------------------

def _check_df(df: float, p: int, what: str = "df"):
    if not df > p - 1:
        raise DomainError(f"{what} must exceed p - 1 = {p - 1}, got {df}")


@dataclass(frozen=True, eq=False)
class WishartParams:
    """Degrees of freedom ``df`` and scale matrix ``scale`` (mean ``df * scale``)."""

    df: float
    scale: np.ndarray

    def __post_init__(self):
        scale = np.atleast_2d(np.asarray(self.scale, dtype=float))
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "_chol", check_spd(scale, "Wishart scale"))
        _check_df(self.df, scale.shape[0])

    @property
    def p(self) -> int:
        return self.scale.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.df * self.scale


def wishart_logpdf(a, params: WishartParams) -> float:
    """Log density of ``W_p(df, V)`` at ``a``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    p, m = params.p, params.df
    if a.shape != (p, p):
        raise DomainError(f"matrix shape {a.shape} does not match scale {(p, p)}")
    chol_a = check_spd(a, "A")
    chol_v = params._chol
    return ((m - p - 1) / 2 * _logdet_from_chol(chol_a)
            - m * p / 2 * _LOG_2
            - m / 2 * _logdet_from_chol(chol_v)
            - multigamma_log(p, m / 2)
            - 0.5 * _trace_inv_product(chol_v, a))


def inverse_wishart_logpdf(b, df: float, scale) -> float:
    """Log density of ``IW_p(df, U)`` at ``b`` (mean ``U / (df - p - 1)``)."""
    b = np.atleast_2d(np.asarray(b, dtype=float))
    u = np.atleast_2d(np.asarray(scale, dtype=float))
    p = u.shape[0]
    if b.shape != (p, p):
        raise DomainError(f"matrix shape {b.shape} does not match scale {(p, p)}")
    _check_df(df, p)
    chol_u = check_spd(u, "inverse Wishart scale")
    chol_b = check_spd(b, "B")
    return (df / 2 * _logdet_from_chol(chol_u)
            - (df + p + 1) / 2 * _logdet_from_chol(chol_b)
            - df * p / 2 * _LOG_2
            - multigamma_log(p, df / 2)
            - 0.5 * _trace_inv_product(chol_b, u))


def _bartlett(df: float, chol: np.ndarray, gen: np.random.Generator, k: int) -> np.ndarray:
    p = chol.shape[0]
    t = np.zeros((k, p, p))
    diag = np.arange(p)
    t[:, diag, diag] = np.sqrt(gen.chisquare(df - diag, size=(k, p)))
    rows, cols = np.tril_indices(p, -1)
    if rows.size:
        t[:, rows, cols] = gen.standard_normal((k, rows.size))
    lt = chol @ t
    out = lt @ np.swapaxes(lt, -1, -2)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def wishart_sample(params: WishartParams, rng, size: int | None = None) -> np.ndarray:
    """Draw from ``W_p(df, V)`` by the Bartlett decomposition.

    With ``T`` lower triangular, ``T_ii^2 ~ chi2(df - i)`` (``i = 0..p-1``) and
    standard normal entries below the diagonal, ``L T T^T L^T`` is Wishart
    where ``L`` is the Cholesky factor of ``V``.  Returns ``(p, p)`` or, when
    ``size`` is given, ``(size, p, p)``.
    """
    gen = as_generator(rng)
    draws = _bartlett(params.df, params._chol, gen, 1 if size is None else int(size))
    return draws[0] if size is None else draws


def inverse_wishart_sample(df: float, scale, rng, size: int | None = None) -> np.ndarray:
    """Draw from ``IW_p(df, U)`` as the inverse of a ``W_p(df, U^-1)`` draw."""
    u = np.atleast_2d(np.asarray(scale, dtype=float))
    chol_u = check_spd(u, "inverse Wishart scale")
    p = u.shape[0]
    _check_df(df, p)
    u_inv = linalg.cho_solve((chol_u, True), np.eye(p))
    u_inv = 0.5 * (u_inv + u_inv.T)
    w = wishart_sample(WishartParams(df, u_inv), rng, size=1 if size is None else size)
    out = np.linalg.inv(w)
    out = 0.5 * (out + np.swapaxes(out, -1, -2))
    return out[0] if size is None else out


# --------------------------------------------------------------------------
# Multivariate normal and Student-t
# --------------------------------------------------------------------------

def mvn_sample(mu, sigma, rng, size: int | None = None) -> np.ndarray:
    """Draw from ``N_p(mu, sigma)`` via the Cholesky factor of ``sigma``."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    chol = check_spd(np.atleast_2d(sigma), "sigma")
    if chol.shape[0] != mu.size:
        raise DomainError(f"mean length {mu.size} does not match sigma {chol.shape}")
    gen = as_generator(rng)
    k = 1 if size is None else int(size)
    z = gen.standard_normal((k, mu.size))
    x = mu + z @ chol.T
    return x[0] if size is None else x


def _mahalanobis(x, loc, chol) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dev = np.atleast_2d(x - loc)
    if dev.shape[-1] != chol.shape[0]:
        raise DomainError(f"point length {dev.shape[-1]} does not match dimension {chol.shape[0]}")
    z = linalg.solve_triangular(chol, dev.T, lower=True)
    return np.sum(z * z, axis=0)


def mvn_logpdf(x, mu, sigma):
    """Log density of ``N_p(mu, sigma)``; ``x`` may be ``(p,)`` or ``(k, p)``."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    chol = check_spd(np.atleast_2d(sigma), "sigma")
    p = mu.size
    d2 = _mahalanobis(x, mu, chol)
    out = -0.5 * (p * math.log(2 * math.pi) + _logdet_from_chol(chol) + d2)
    return float(out[0]) if np.ndim(x) <= 1 and out.size == 1 else out


def mvt_logpdf(x, loc, scale, df: float):
    """Log density of the multivariate Student-t with location ``loc``,
    scale matrix ``scale`` and ``df`` degrees of freedom."""
    if not df > 0:
        raise DomainError(f"df must be positive, got {df}")
    loc = np.atleast_1d(np.asarray(loc, dtype=float))
    chol = check_spd(np.atleast_2d(scale), "scale")
    p = loc.size
    d2 = _mahalanobis(x, loc, chol)
    out = (gammaln((df + p) / 2) - gammaln(df / 2)
           - p / 2 * math.log(df * math.pi)
           - 0.5 * _logdet_from_chol(chol)
           - (df + p) / 2 * np.log1p(d2 / df))
    return float(out[0]) if np.ndim(x) <= 1 and out.size == 1 else out
