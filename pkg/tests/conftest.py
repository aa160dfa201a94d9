import numpy as np
import pytest

from interval_stats.intervals import load_bundled


@pytest.fixture(scope="session")
def medical():
    return load_bundled("medical")


@pytest.fixture(scope="session")
def cars():
    return load_bundled("cars")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(gen, p, scale=1.0):
    a = gen.standard_normal((p, p))
    return scale * (a @ a.T + p * np.eye(p))


def moment_matched_sample(mu, sigma):
    """2p points whose mean is ``mu`` and divisor-n scatter is exactly ``sigma``.

    The Gaussian log-density is quadratic in the data, so the average Hessian
    over this sample equals its expectation under N(mu, sigma).
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    p = mu.size
    low = np.linalg.cholesky(np.atleast_2d(sigma))
    cols = np.sqrt(p) * low.T
    return np.vstack([mu + cols, mu - cols])


def moment_corrected_draws(mu, sigma, size, gen):
    """Monte Carlo draws from N(mu, sigma), affinely corrected so the sample
    mean and divisor-n covariance equal (mu, sigma) exactly."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    x = gen.standard_normal((size, mu.size))
    x -= x.mean(axis=0)
    white = np.linalg.cholesky(x.T @ x / size)
    z = np.linalg.solve(white, x.T).T
    return mu + z @ np.linalg.cholesky(np.atleast_2d(sigma)).T


def fd_fisher(mu, sigma, h=1e-4, sample=None):
    """Minus the central finite-difference Hessian of the mean per-observation
    normal log-likelihood in (mu, vech(sigma)), vech column-major lower.

    ``sample`` defaults to :func:`moment_matched_sample`."""
    from interval_stats.estimation import log_likelihood_L1, unvech, vech

    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    p = mu.size
    x = moment_matched_sample(mu, sigma) if sample is None else sample
    w0 = np.concatenate([mu, vech(sigma)])
    q = w0.size
    scale = np.maximum(np.abs(w0), 1.0) * h

    def f(w):
        return log_likelihood_L1(w[:p], unvech(w[p:], p), x) / x.shape[0]

    hess = np.zeros((q, q))
    for a in range(q):
        for b in range(a, q):
            ea = np.zeros(q)
            eb = np.zeros(q)
            ea[a] = scale[a]
            eb[b] = scale[b]
            val = (f(w0 + ea + eb) - f(w0 + ea - eb) - f(w0 - ea + eb) + f(w0 - ea - eb)) / (
                4 * scale[a] * scale[b])
            hess[a, b] = hess[b, a] = val
    return -hess
