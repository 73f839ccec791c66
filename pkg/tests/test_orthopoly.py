"""Polynomial families against closed-form series oracles and orthonormality."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite_e import hermegauss

from chaosbsde import MAX_DEGREE, charlier_upto, hermite_upto
from chaosbsde.orthopoly import charlier_batch, hermite_batch

finite_x = st.floats(min_value=-30.0, max_value=30.0,
                     allow_nan=False, allow_infinity=False)


def hermite_series_oracle(m, x):
    """K_m(x) = sum_j x^(m-2j) (-1/2)^j / ((m-2j)! j!), from the generating function."""
    total = 0.0
    for j in range(m // 2 + 1):
        total += x ** (m - 2 * j) * (-0.5) ** j / (
            math.factorial(m - 2 * j) * math.factorial(j))
    return total


def charlier_sum_oracle(m, x, t):
    """C_m(x, t) = sum_k binom(m, k) (-t)^(m-k) x_(k) with x_(k) falling factorial."""
    total = 0.0
    for k in range(m + 1):
        falling = 1.0
        for i in range(k):
            falling *= x - i
        total += math.comb(m, k) * (-t) ** (m - k) * falling
    return total


class TestHermite:
    def test_degree_one(self):
        assert list(hermite_upto(1, 3.5)) == [1.0, 3.5]

    def test_degree_two(self):
        np.testing.assert_allclose(hermite_upto(2, 3.0).values, [1, 3, 4], rtol=1e-15)

    def test_degree_three(self):
        np.testing.assert_allclose(hermite_upto(3, 2.0).values,
                                   [1, 2, 1.5, 1 / 3], rtol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(x=st.floats(min_value=-8, max_value=8, allow_nan=False), m=st.integers(0, 8))
    def test_matches_series_oracle(self, x, m):
        got = hermite_upto(m, x)[m]
        want = hermite_series_oracle(m, x)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(x=finite_x, m=st.integers(2, 10))
    def test_recurrence_identity(self, x, m):
        # (m+1) K_{m+1} = x K_m - K_{m-1}
        table = hermite_upto(m + 1, x)
        assert (m + 1) * table[m + 1] == pytest.approx(
            x * table[m] - table[m - 1], rel=1e-12, abs=1e-300)

    def test_derivative_is_previous_degree(self):
        # K'_m = K_{m-1}, checked by central differences at O(eps^2)
        eps = 1e-6
        for x in (-1.7, 0.3, 2.9):
            up = hermite_upto(6, x + eps).values
            dn = hermite_upto(6, x - eps).values
            mid = hermite_upto(6, x).values
            for m in range(1, 7):
                deriv = (up[m] - dn[m]) / (2 * eps)
                assert deriv == pytest.approx(mid[m - 1], rel=1e-7, abs=1e-7)

    def test_orthonormality_gauss_quadrature(self):
        # E[m! K_m(G)^2] = 1 and cross moments vanish, G standard normal
        nodes, weights = hermegauss(60)
        weights = weights / weights.sum()
        tables = np.array([hermite_upto(6, x).values for x in nodes])
        for m in range(7):
            for n in range(7):
                moment = float(np.dot(weights, tables[:, m] * tables[:, n]))
                scaled = math.factorial(m) * moment if m == n else moment
                want = 1.0 if m == n else 0.0
                assert scaled == pytest.approx(want, abs=1e-8)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            hermite_upto(3, math.nan)
        with pytest.raises(ValueError):
            hermite_upto(3, math.inf)

    def test_rejects_above_degree_cap(self):
        hermite_upto(MAX_DEGREE, 0.5)
        with pytest.raises(ValueError):
            hermite_upto(MAX_DEGREE + 1, 0.5)

    def test_rejects_negative_degree(self):
        with pytest.raises(ValueError):
            hermite_upto(-1, 0.5)

    def test_batch_matches_scalar(self):
        xs = np.array([-2.0, 0.0, 0.7, 4.2])
        table = hermite_batch(5, xs)
        assert table.shape == (6, 4)
        for j, x in enumerate(xs):
            np.testing.assert_array_equal(table[:, j], hermite_upto(5, x).values)


class TestCharlier:
    def test_degree_one(self):
        assert list(charlier_upto(1, 5, 2.0)) == [1.0, 3.0]

    def test_degree_two_cases(self):
        np.testing.assert_allclose(charlier_upto(2, 3, 1.0).values, [1, 2, 1], rtol=1e-15)
        np.testing.assert_allclose(charlier_upto(2, 2, 1.0).values, [1, 1, -1], rtol=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(x=st.integers(0, 40), t=st.floats(min_value=0, max_value=5,
                                             allow_nan=False), m=st.integers(0, 8))
    def test_matches_falling_factorial_oracle(self, x, t, m):
        got = charlier_upto(m, x, t)[m]
        want = charlier_sum_oracle(m, float(x), t)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(x=st.floats(min_value=0, max_value=40, allow_nan=False),
           t=st.floats(min_value=0, max_value=5, allow_nan=False),
           m=st.integers(1, 10))
    def test_recurrence_identity(self, x, t, m):
        table = charlier_upto(m + 1, x, t)
        want = (x - m - t) * table[m] - m * t * table[m - 1]
        assert table[m + 1] == pytest.approx(want, rel=1e-12, abs=1e-300)

    @pytest.mark.parametrize("t", [0.05, 0.12, 1.0])
    def test_orthogonality_poisson_summation(self, t):
        # sum_x C_m C_n Pois_t(x) = delta_mn m! t^m, truncated far into the tail
        x_max = 80
        pmf = np.array([math.exp(-t) * t ** x / math.factorial(x)
                        for x in range(x_max + 1)])
        tables = np.array([charlier_upto(6, x, t).values for x in range(x_max + 1)])
        for m in range(7):
            for n in range(7):
                got = float(np.dot(pmf, tables[:, m] * tables[:, n]))
                want = math.factorial(m) * t ** m if m == n else 0.0
                scale = max(abs(want), 1.0)
                assert abs(got - want) <= 1e-8 * scale

    def test_rejects_negative_t(self):
        with pytest.raises(ValueError):
            charlier_upto(3, 1, -0.1)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            charlier_upto(3, math.nan, 1.0)

    def test_rejects_above_degree_cap(self):
        charlier_upto(MAX_DEGREE, 2, 0.5)
        with pytest.raises(ValueError):
            charlier_upto(MAX_DEGREE + 1, 2, 0.5)

    def test_batch_matches_scalar(self):
        xs = np.array([0, 1, 2, 7], dtype=np.int64)
        table = charlier_batch(4, xs, 0.12)
        assert table.shape == (5, 4)
        for j, x in enumerate(xs):
            np.testing.assert_array_equal(table[:, j],
                                          charlier_upto(4, int(x), 0.12).values)


class TestPolyTable:
    def test_leading_entry_is_one(self):
        assert hermite_upto(0, 1.23)[0] == 1.0
        assert charlier_upto(0, 3, 0.7)[0] == 1.0

    def test_len_and_max_degree(self):
        table = hermite_upto(4, 0.5)
        assert len(table) == 5
        assert table.max_degree == 4
