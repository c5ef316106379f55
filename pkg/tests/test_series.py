import cmath

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from isoball.errors import Rejection
from isoball.series import (
    TruncatedSeries,
    series_compose,
    series_evaluate,
    series_fractional_power,
    series_multiply,
    series_recenter,
    series_reversion,
)


def S(coeffs, center=0j):
    return TruncatedSeries(center, np.asarray(coeffs, dtype=complex))


def test_multiply_difference_of_squares():
    out = series_multiply(S([1, 1, 0]), S([1, -1, 0]))
    np.testing.assert_allclose(out.coeffs, [1, 0, -1])


def test_multiply_by_one_is_identity():
    c = [0.3, -1j, 2, 0.5]
    np.testing.assert_allclose(series_multiply(S([1, 0, 0, 0]), S(c)).coeffs, c)


def test_multiply_geometric_squares():
    g = S([1, 1, 1, 1])
    np.testing.assert_allclose(series_multiply(g, g).coeffs, [1, 2, 3, 4])


def test_multiply_truncates_to_smaller_order():
    assert series_multiply(S([1, 1, 1, 1]), S([1, 1])).order == 1


def test_multiply_rejects_mismatched_centers():
    with pytest.raises(Rejection) as err:
        series_multiply(S([1, 1], 0), S([1, 1], 0.5))
    assert "0.5" in str(err.value)


def test_compose_square_of_w_plus_w2():
    out = series_compose(S([0, 0, 1, 0]), S([0, 1, 1, 0]))
    np.testing.assert_allclose(out.coeffs, [0, 0, 1, 2])


def test_compose_identity_outer():
    inner = S([0, 0.5, -2j, 3])
    np.testing.assert_allclose(series_compose(S([0, 1, 0, 0]), inner).coeffs, inner.coeffs)


def test_compose_constant_outer():
    out = series_compose(S([2.5, 0, 0, 0]), S([0, 1, 1, 1]))
    np.testing.assert_allclose(out.coeffs, [2.5, 0, 0, 0])


def test_compose_rejects_nonzero_inner_constant():
    with pytest.raises(Rejection):
        series_compose(S([0, 1, 0]), S([0.3, 1, 0]))


def test_reversion_identity():
    np.testing.assert_allclose(series_reversion(S([0, 1, 0, 0])).coeffs, [0, 1, 0, 0])


def test_reversion_w_plus_w2():
    np.testing.assert_allclose(series_reversion(S([0, 1, 1, 0, 0])).coeffs, [0, 1, -1, 2, -5], atol=1e-14)


def test_reversion_linear_scaling():
    np.testing.assert_allclose(series_reversion(S([0, 2, 0])).coeffs, [0, 0.5, 0])


def test_reversion_rejects_zero_linear_term():
    with pytest.raises(Rejection, match="not invertible"):
        series_reversion(S([0, 0, 1]))


def test_fractional_power_of_one():
    np.testing.assert_allclose(series_fractional_power(S([1, 0, 0]), 0.37).coeffs, [1, 0, 0])


def test_fractional_power_binomial():
    np.testing.assert_allclose(series_fractional_power(S([1, 1, 0]), 0.5).coeffs, [1, 0.5, -0.125])


def test_fractional_power_principal_root_of_i():
    out = series_fractional_power(S([1j, 0]), 0.5)
    assert abs(out.coeffs[0] - cmath.exp(1j * cmath.pi / 4)) < 1e-15


def test_fractional_power_rejects_branch_point():
    with pytest.raises(Rejection):
        series_fractional_power(S([0, 1]), 0.5)


def test_evaluate_examples():
    assert series_evaluate(S([1, -1]), 0).value == 1
    geo = series_evaluate(S(np.ones(51)), 0.5)
    assert abs(geo.value - 2.0) < 1e-12 and geo.reliable
    assert abs(series_evaluate(S([0, 1, 1]), 0.1).value - 0.11) < 1e-15


def test_evaluate_flags_points_outside_radius():
    assert not series_evaluate(S(np.ones(51)), 1.5).reliable


def test_recenter_matches_direct_evaluation():
    f = S([1, 2, 3, 4])
    g = series_recenter(f, 0.3)
    assert abs(g(0.5) - f(0.5)) < 1e-14


def test_json_round_trip():
    f = S([1, 2j, -3], center=0.25)
    g = TruncatedSeries.from_json(f.to_json())
    assert g.center == f.center
    np.testing.assert_array_equal(g.coeffs, f.coeffs)


coeff = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(coeff, min_size=17, max_size=17), st.lists(coeff, min_size=17, max_size=17),
       st.lists(coeff, min_size=17, max_size=17))
def test_distributive_law(a, b, c):
    a, b, c = S(a), S(b), S(c)
    lhs = series_multiply(a + b, c).coeffs
    rhs = (series_multiply(a, c) + series_multiply(b, c)).coeffs
    np.testing.assert_allclose(lhs, rhs, atol=1e-13 * max(1, np.max(np.abs(lhs))))


def _identity_residual(f):
    g = series_reversion(f)
    comp = series_compose(f, g).coeffs.copy()
    comp[1] -= 1
    return float(np.max(np.abs(comp))), float(np.max(np.abs(g.coeffs)))


def test_reversion_random_ensemble():
    rng = np.random.default_rng(7)
    for _ in range(100):
        c1 = rng.uniform(0.5, 2) * np.exp(2j * np.pi * rng.uniform())
        rest = 0.1 * (rng.normal(size=14) + 1j * rng.normal(size=14))
        res, size = _identity_residual(S(np.concatenate([[0, c1], rest])))
        # the inverse coefficients grow like |c1|^-(2k-1), so rounding in the check scales with them
        assert res <= 1e-11 * max(1.0, size)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 2), st.floats(0, 2 * np.pi), st.lists(coeff, min_size=14, max_size=14))
def test_reversion_composes_to_identity(m, phase, rest):
    # adversarial inputs can make the inverse coefficients huge; scale the bound by them
    f = S([0, m * np.exp(1j * phase)] + [0.3 * c for c in rest])
    res, size = _identity_residual(f)
    assert res <= 1e-11 * max(1.0, size)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.lists(coeff, min_size=16, max_size=16))
def test_root_power_round_trip(p, rest):
    f = S([1] + [0.2 * c for c in rest])
    r = series_fractional_power(f, 1.0 / p)
    prod = r
    for _ in range(p - 1):
        prod = series_multiply(prod, r)
    np.testing.assert_allclose(prod.coeffs, f.coeffs, atol=1e-11)
