import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy import integrate

from interval_stats.exceptions import DataError
from interval_stats.intervals import (
    Interval, IntervalDataset, IntervalObservation, InternalRep, dataset_to_csv,
    describe, describe_cov, describe_mean_var, internal_mean, internal_spread,
    parse_dataset, read_dataset,
)


def obs(*pairs):
    return IntervalObservation(tuple(Interval(a, b) for a, b in pairs))


def ds(rows):
    """rows: list of list of (a, b) pairs."""
    return IntervalDataset.from_observations([obs(*r) for r in rows])


# -- independent oracles: equal-weight mixture of uniform distributions --------

def mixture_mean_var(intervals):
    """Integrate the mixture density numerically (point masses handled exactly)."""
    n = len(intervals)

    def moment(k):
        total = 0.0
        for a, b in intervals:
            if a == b:
                total += a**k
            else:
                total += integrate.quad(lambda x: x**k / (b - a), a, b)[0]
        return total / n

    m1 = moment(1)
    return m1, moment(2) - m1**2


def mixture_cov(pairs):
    """Covariance when each rectangle's mass lies uniformly on its main diagonal,
    integrated numerically over the diagonal parameter t in [0, 1]."""
    n = len(pairs)
    e1 = sum(integrate.quad(lambda t: a1 + t * (b1 - a1), 0, 1)[0] for (a1, b1), _ in pairs) / n
    e2 = sum(integrate.quad(lambda t: a2 + t * (b2 - a2), 0, 1)[0] for _, (a2, b2) in pairs) / n
    e12 = sum(integrate.quad(lambda t: (a1 + t * (b1 - a1)) * (a2 + t * (b2 - a2)), 0, 1)[0]
              for (a1, b1), (a2, b2) in pairs) / n
    return e12 - e1 * e2


class TestParse:
    def test_medical_first_row(self):
        d = parse_dataset("a_1,b_1,a_2,b_2,a_3,b_3\n58,90,118,173,63,102\n")
        assert (d.n, d.p) == (1, 3)
        assert_array_equal(d.lower[0], [58, 118, 63])
        assert_array_equal(d.upper[0], [90, 173, 102])
        assert d.names == ("1", "2", "3")

    def test_point_interval_accepted(self):
        d = parse_dataset("a_1,b_1\n5,5\n")
        assert d.lower[0, 0] == d.upper[0, 0] == 5

    def test_lower_above_upper(self):
        with pytest.raises(DataError, match="lower > upper at row 1, var 1"):
            parse_dataset("a_1,b_1\n9,3\n")

    def test_malformed_number(self):
        with pytest.raises(DataError, match="row 2, var 2"):
            parse_dataset("a_1,b_1,a_2,b_2\n1,2,3,4\n1,2,x,4\n")

    def test_odd_columns(self):
        with pytest.raises(DataError):
            parse_dataset("a_1,b_1,a_2\n1,2,3\n")
        with pytest.raises(DataError, match="odd"):
            parse_dataset("1,2,3\n")

    def test_ragged_row(self):
        with pytest.raises(DataError, match="row 2"):
            parse_dataset("a_1,b_1\n1,2\n1,2,3,4\n")

    def test_bad_header(self):
        with pytest.raises(DataError):
            parse_dataset("a_x,b_y\n1,2\n")

    def test_named_header(self):
        d = parse_dataset("a_pulse,b_pulse\n1,2\n")
        assert d.names == ("pulse",)

    def test_headerless(self):
        assert parse_dataset("1,2,3,4\n").p == 2

    def test_bundled_shapes(self, medical, cars):
        assert (medical.n, medical.p) == (59, 3)
        assert (cars.n, cars.p) == (8, 4)

    def test_bundled_fallback(self):
        assert read_dataset("cars.csv").n == 8
        with pytest.raises(FileNotFoundError):
            read_dataset("nonexistent-file.csv")

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(-1e6, 1e6, allow_nan=False),
                              st.floats(0, 1e6, allow_nan=False)),
                    min_size=2, max_size=12).filter(lambda x: len(x) % 2 == 0))
    def test_round_trip(self, cells):
        p = len(cells) // 2
        lo = [a for a, _ in cells]
        hi = [a + w for a, w in cells]
        d = IntervalDataset(np.array([lo]), np.array([hi]), tuple(str(j) for j in range(len(cells))))
        d2 = parse_dataset(dataset_to_csv(d))
        d3 = parse_dataset(dataset_to_csv(d2))
        assert_array_equal(d2.lower, d.lower)
        assert_array_equal(d2.upper, d.upper)
        assert dataset_to_csv(d3) == dataset_to_csv(d2)
        assert p >= 1


class TestInternalRep:
    def test_mean_aston_martin_price(self):
        assert internal_mean(obs((260.5, 460.0)))[0] == pytest.approx(360.25)

    def test_mean_degenerate(self):
        assert internal_mean(obs((3.5, 3.5)))[0] == 3.5

    def test_mean_medical_row(self):
        assert_allclose(internal_mean(obs((58, 90), (118, 173), (63, 102))), [74, 145.5, 82.5])

    def test_spread_hand_value(self):
        # widths 32 and 55
        expect = np.array([[32 * 32, 32 * 55], [32 * 55, 55 * 55]]) / 12
        assert_allclose(internal_spread(obs((58, 90), (118, 173))), expect)
        assert_allclose(expect, [[85.3333, 146.6667], [146.6667, 252.0833]], atol=1e-4)

    def test_spread_degenerate(self):
        assert_array_equal(internal_spread(obs((1, 1), (2, 2))), np.zeros((2, 2)))

    def test_spread_unit(self):
        assert internal_spread(obs((0, math.sqrt(12))))[0, 0] == pytest.approx(1.0)

    def test_rank_one_property(self, medical):
        t2 = medical.theta2()
        w = medical.upper - medical.lower
        for i in range(medical.n):
            assert_allclose(t2[i], np.outer(w[i], w[i]) / 12, rtol=0, atol=1e-12)
            assert_allclose(t2[i], internal_spread(medical[i]), rtol=1e-15)
            assert np.linalg.matrix_rank(t2[i]) <= 1

    def test_json(self):
        rep = InternalRep(np.array([1.0, 2.0]), np.array([[1.0, 0.5], [0.5, 2.0]]))
        d = json.loads(rep.to_json())
        assert d == {"theta1": [1.0, 2.0], "theta2": [[1.0, 0.5], [0.5, 2.0]]}
        back = InternalRep.from_dict(d)
        assert_array_equal(back.theta2, rep.theta2)


class TestDescriptive:
    def test_unit_interval(self):
        m, v = describe_mean_var(ds([[(0, 1)]]), 0)
        assert m == pytest.approx(0.5)
        assert v == pytest.approx(1 / 12)

    def test_point(self):
        assert describe_mean_var(ds([[(4, 4)]]), 0) == (4.0, 0.0)

    def test_two_intervals_against_quadrature(self):
        m, v = describe_mean_var(ds([[(0, 2)], [(2, 4)]]), 0)
        om, ov = mixture_mean_var([(0, 2), (2, 4)])
        assert m == pytest.approx(om, abs=1e-10)
        assert v == pytest.approx(ov, abs=1e-10)
        assert (m, v) == pytest.approx((2.0, 4 / 3))

    def test_medical_against_quadrature(self, medical):
        for j in range(medical.p):
            iv = list(zip(medical.lower[:, j], medical.upper[:, j]))
            m, v = describe_mean_var(medical, j)
            om, ov = mixture_mean_var(iv)
            assert m == pytest.approx(om, rel=1e-10)
            assert v == pytest.approx(ov, rel=1e-7)

    def test_cov_degenerate_coordinate(self):
        d = ds([[(0, 2), (5, 5)], [(1, 7), (5, 5)], [(3, 4), (5, 5)]])
        assert describe_cov(d, 0, 1) == pytest.approx(0.0, abs=1e-12)

    def test_cov_identical_coordinates_equals_variance(self):
        d = ds([[(0, 2), (0, 2)], [(2, 4), (2, 4)]])
        _, v = describe_mean_var(d, 0)
        oracle = mixture_cov([((0, 2), (0, 2)), ((2, 4), (2, 4))])
        assert describe_cov(d, 0, 1) == pytest.approx(v)
        assert describe_cov(d, 0, 1) == pytest.approx(oracle, abs=1e-10)

    def test_cov_cars_against_quadrature(self, cars):
        for j in range(cars.p):
            for k in range(j + 1, cars.p):
                pairs = [((cars.lower[i, j], cars.upper[i, j]), (cars.lower[i, k], cars.upper[i, k]))
                         for i in range(cars.n)]
                assert describe_cov(cars, j, k) == pytest.approx(mixture_cov(pairs), rel=1e-7)
                assert describe_cov(cars, j, k) == describe_cov(cars, k, j)

    def test_degenerate_dataset_reduces_to_classical(self, rng):
        x = rng.normal(size=(15, 2))
        d = IntervalDataset(x, x, ("u", "v"))
        for j in range(2):
            m, v = describe_mean_var(d, j)
            assert m == pytest.approx(x[:, j].mean())
            assert v == pytest.approx(x[:, j].var())
        assert describe_cov(d, 0, 1) == pytest.approx(np.cov(x.T, ddof=0)[0, 1])
        assert_array_equal(d.theta2(), 0)

    def test_mean_is_mean_of_midpoints(self, medical):
        mids = np.array([internal_mean(o) for o in medical.observations])
        for j in range(medical.p):
            assert describe_mean_var(medical, j)[0] == pytest.approx(mids[:, j].mean())

    def test_describe_report(self, cars):
        rep = describe(cars)
        assert rep["variables"][0]["mean"] == pytest.approx(201.4687, abs=1e-3)
        assert len(rep["covariances"]) == 6
