import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import integrate, stats
from scipy.special import gammaln, multigammaln

from interval_stats.distributions import (
    RngStream, WishartParams, as_generator, check_spd, inverse_wishart_logpdf,
    inverse_wishart_sample, multigamma_log, mvn_logpdf, mvn_sample, mvt_logpdf,
    wishart_logpdf, wishart_sample,
)
from interval_stats.exceptions import DomainError, NotPositiveDefiniteError

from conftest import random_spd


class TestRngStream:
    def test_same_key_same_draws(self):
        assert_array_equal(RngStream(7, 3).generator.random(5), RngStream(7, 3).generator.random(5))

    def test_streams_differ(self):
        assert not np.array_equal(RngStream(7, 0).generator.random(5),
                                  RngStream(7, 1).generator.random(5))

    def test_spawn_deterministic(self):
        a, b = RngStream(1).spawn(4), RngStream(1).spawn(4)
        assert a == b
        assert a != RngStream(1).spawn(5)

    def test_range(self):
        with pytest.raises(DomainError):
            RngStream(-1)
        with pytest.raises(DomainError):
            RngStream(0, 2**64)

    def test_as_generator(self):
        g = np.random.default_rng(0)
        assert as_generator(g) is g
        assert_array_equal(as_generator(5).random(3), RngStream(5).generator.random(3))
        with pytest.raises(TypeError):
            as_generator("seed")


class TestCheckSpd:
    def test_returns_factor(self):
        a = np.array([[4.0, 2.0], [2.0, 3.0]])
        low = check_spd(a)
        assert_allclose(low @ low.T, a)

    def test_rejects_singular(self):
        with pytest.raises(NotPositiveDefiniteError):
            check_spd(np.ones((2, 2)))

    def test_rejects_asymmetric(self):
        with pytest.raises(NotPositiveDefiniteError):
            check_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefiniteError):
            check_spd(np.diag([1.0, -1.0]))


class TestMultigamma:
    def test_p1(self):
        assert multigamma_log(1, 3) == pytest.approx(math.log(2))

    def test_p2(self):
        assert multigamma_log(2, 1) == pytest.approx(math.log(math.pi))
        assert math.log(math.pi) == pytest.approx(1.144730, abs=1e-6)

    def test_pole(self):
        with pytest.raises(DomainError):
            multigamma_log(2, 0.5)

    @pytest.mark.parametrize("p,z", [(3, 2.2), (4, 7.5), (2, 0.75)])
    def test_against_scipy(self, p, z):
        assert multigamma_log(p, z) == pytest.approx(multigammaln(z, p))


class TestWishartDensity:
    def test_hand_value(self):
        v = wishart_logpdf(np.array([[2.0]]), WishartParams(2, [[1.0]]))
        assert v == pytest.approx(-1 - math.log(2))

    def test_integrates_to_one(self):
        params = WishartParams(2, [[1.0]])
        total = integrate.quad(lambda a: math.exp(wishart_logpdf([[a]], params)), 0, 60)[0]
        assert total == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("p,m", [(2, 3), (3, 5.5), (4, 4)])
    def test_against_scipy(self, p, m):
        gen = np.random.default_rng(p)
        v = random_spd(gen, p)
        a = random_spd(gen, p)
        assert wishart_logpdf(a, WishartParams(m, v)) == pytest.approx(
            stats.wishart.logpdf(a, df=m, scale=v), rel=1e-10)

    def test_scale_invariance(self):
        # A -> cA on symmetric p x p matrices has Jacobian c^(p(p+1)/2)
        gen = np.random.default_rng(3)
        for p in (1, 2, 3):
            v, a = random_spd(gen, p), random_spd(gen, p)
            c = gen.uniform(0.2, 5)
            lhs = wishart_logpdf(a, WishartParams(p + 2, v))
            rhs = wishart_logpdf(c * a, WishartParams(p + 2, c * v)) + p * (p + 1) / 2 * math.log(c)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_errors(self):
        with pytest.raises(DomainError):
            WishartParams(0.5, np.eye(2))
        with pytest.raises(NotPositiveDefiniteError):
            wishart_logpdf(np.diag([1.0, -1.0]), WishartParams(3, np.eye(2)))
        with pytest.raises(NotPositiveDefiniteError):
            WishartParams(3, np.ones((2, 2)))
        with pytest.raises(DomainError):
            wishart_logpdf(np.eye(3), WishartParams(3, np.eye(2)))

    def test_real_df_above_boundary(self):
        assert math.isfinite(wishart_logpdf(np.eye(2), WishartParams(1.2, np.eye(2))))


class TestInverseWishartDensity:
    def test_hand_value(self):
        # U^(m/2) / (2^(m/2) Gamma(m/2)) * B^(-(m+2)/2) * exp(-U/(2B)) at m=3, U=2, B=1
        expect = 1.5 * math.log(2) - 1.5 * math.log(2) - gammaln(1.5) - 1.0
        assert inverse_wishart_logpdf([[1.0]], 3, [[2.0]]) == pytest.approx(expect)
        assert expect == pytest.approx(-0.879218, abs=1e-6)

    def test_change_of_variables(self):
        gen = np.random.default_rng(9)
        for p in (1, 2, 3):
            u = random_spd(gen, p)
            m = p + 3
            for _ in range(3):
                b = random_spd(gen, p, 0.3)
                binv = np.linalg.inv(b)
                lhs = inverse_wishart_logpdf(b, m, u)
                rhs = (wishart_logpdf(binv, WishartParams(m, np.linalg.inv(u)))
                       - (p + 1) * np.linalg.slogdet(b)[1])
                assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_against_scipy(self):
        gen = np.random.default_rng(1)
        u, b = random_spd(gen, 3), random_spd(gen, 3)
        assert inverse_wishart_logpdf(b, 6, u) == pytest.approx(
            stats.invwishart.logpdf(b, df=6, scale=u), rel=1e-10)

    def test_boundary(self):
        with pytest.raises(DomainError):
            inverse_wishart_logpdf(np.eye(2), 1, np.eye(2))


class TestSamplers:
    def test_wishart_mean_scenario_ii(self):
        lam = np.array([[2.0, 1.0], [1.0, 5.0]])
        draws = wishart_sample(WishartParams(3, lam), RngStream(11), size=10_000)
        assert_allclose(draws.mean(axis=0), 3 * lam, rtol=0.02)

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_wishart_mean_frobenius(self, p):
        v = random_spd(np.random.default_rng(p + 10), p)
        m = p + 1
        draws = wishart_sample(WishartParams(m, v), RngStream(p), size=10_000)
        assert np.linalg.norm(draws.mean(axis=0) - m * v) / np.linalg.norm(m * v) <= 0.02

    def test_univariate_scale_half_lambda(self):
        lam = 2.0
        draws = wishart_sample(WishartParams(2, [[lam / 2]]), RngStream(5), size=10_000)[:, 0, 0]
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - lam) < 3 * se

    def test_chi2_identity(self):
        m = 4
        x = wishart_sample(WishartParams(m, [[1.0]]), RngStream(8), size=20_000)[:, 0, 0]
        k = x.size
        assert abs(x.mean() - m) < 3 * math.sqrt(2 * m / k)
        # SE of the sample variance for chi2_m: sqrt((mu4 - sigma^4) / k)
        mu4 = 12 * m * (m + 4)
        assert abs(x.var(ddof=1) - 2 * m) < 3 * math.sqrt((mu4 - (2 * m) ** 2) / k)
        assert stats.kstest(x, stats.chi2(m).cdf).pvalue > 0.001

    def test_draws_are_spd_and_symmetric(self):
        draws = wishart_sample(WishartParams(3, np.eye(3)), RngStream(2), size=50)
        assert_array_equal(draws, np.swapaxes(draws, 1, 2))
        assert np.all(np.linalg.eigvalsh(draws) > 0)

    def test_single_draw_shape(self):
        assert wishart_sample(WishartParams(3, np.eye(2)), RngStream(0)).shape == (2, 2)

    def test_determinism(self):
        params = WishartParams(3, [[2.0, 1.0], [1.0, 5.0]])
        assert_array_equal(wishart_sample(params, RngStream(4, 2)),
                           wishart_sample(params, RngStream(4, 2)))

    def test_inverse_wishart_mean(self):
        u = np.array([[2.0, 0.5], [0.5, 1.0]])
        p = 2
        m = p + 5
        draws = inverse_wishart_sample(m, u, RngStream(3), size=20_000)
        assert_allclose(draws.mean(axis=0), u / (m - p - 1), rtol=0.03)

    def test_mvn_mean_scenario_ii(self):
        sigma = np.array([[4.0, 3.0], [3.0, 9.0]])
        x = mvn_sample([2.0, 4.0], sigma, RngStream(6), size=10_000)
        se = np.sqrt(np.diag(sigma) / x.shape[0])
        assert np.all(np.abs(x.mean(axis=0) - [2, 4]) < 3 * se)
        assert_allclose(np.cov(x.T), sigma, rtol=0.05)


class TestVectorDensities:
    def test_mvn_standard(self):
        assert mvn_logpdf([0.0], [0.0], [[1.0]]) == pytest.approx(-0.5 * math.log(2 * math.pi))

    def test_mvn_against_scipy(self):
        gen = np.random.default_rng(4)
        s = random_spd(gen, 3)
        x, mu = gen.normal(size=3), gen.normal(size=3)
        assert mvn_logpdf(x, mu, s) == pytest.approx(stats.multivariate_normal.logpdf(x, mu, s))

    def test_mvn_symmetry(self):
        gen = np.random.default_rng(2)
        s, mu = random_spd(gen, 2), np.array([1.0, -2.0])
        for _ in range(5):
            v = gen.normal(size=2)
            assert mvn_logpdf(mu + v, mu, s) == pytest.approx(mvn_logpdf(mu - v, mu, s))

    def test_cauchy(self):
        assert mvt_logpdf([0.0], [0.0], [[1.0]], 1) == pytest.approx(-math.log(math.pi))

    def test_large_df_limit(self):
        assert abs(mvt_logpdf([0.3], [0.0], [[1.0]], 1e7) - mvn_logpdf([0.3], [0.0], [[1.0]])) < 1e-3

    def test_mode(self):
        s = np.array([[2.0, 0.3], [0.3, 1.0]])
        loc = np.array([1.0, 2.0])
        at_loc = mvt_logpdf(loc, loc, s, 4)
        grid = [loc + np.array([dx, dy]) for dx in np.linspace(-2, 2, 9)
                for dy in np.linspace(-2, 2, 9) if dx or dy]
        assert all(mvt_logpdf(g, loc, s, 4) < at_loc for g in grid)

    def test_mvt_against_scipy(self):
        gen = np.random.default_rng(5)
        s = random_spd(gen, 3)
        x = gen.normal(size=3)
        assert mvt_logpdf(x, np.zeros(3), s, 3.5) == pytest.approx(
            stats.multivariate_t.logpdf(x, np.zeros(3), s, df=3.5))

    def test_df_positive(self):
        with pytest.raises(DomainError):
            mvt_logpdf([0.0], [0.0], [[1.0]], 0)
