import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
import hypothesis.strategies as st

from isoball.errors import Rejection
from isoball.series import TruncatedSeries, series_compose
from isoball.solver import (
    RationalMap,
    UnitaryMatrix,
    UnitarySolvedMap,
    blaschke_factorize,
    blaschke_symmetry_residual,
    component_identity_residual,
    extend_factor,
    f1_vanishes,
    inverse_identity_residual,
    normalize_unitary,
    peel_factor,
    random_unitary,
    rational_R,
    solve_isometry,
    u_zeta,
)
from isoball.verify import check_series_solution, sample_grid


def identity_residual(R, f1, order=40):
    return inverse_identity_residual(R, f1.truncate(order))


def test_u_zeta_at_zero():
    np.testing.assert_array_equal(u_zeta(0).matrix, [[0, -1, 0], [0, 0, 1], [1, 0, 0]])


def test_u_zeta_first_row():
    s = math.sqrt(0.96)
    np.testing.assert_allclose(u_zeta(0.2).matrix[0], [-0.04, -s, 0.2 * s], atol=1e-16)


def test_u_zeta_unitary_on_random_parameters():
    rng = np.random.default_rng(0)
    for _ in range(50):
        z = (1 / 3) * math.sqrt(rng.uniform(0, 0.999)) * np.exp(2j * np.pi * rng.uniform())
        m = u_zeta(z).matrix
        assert np.max(np.abs(m @ m.conj().T - np.eye(3))) <= 1e-14


def test_u_zeta_rejects_large_parameter():
    with pytest.raises(Rejection):
        u_zeta(0.34)


def test_unitary_gate():
    with pytest.raises(Rejection):
        UnitaryMatrix(np.array([[1, 0], [0, 1.001]]))


def test_f1_vanishes():
    assert f1_vanishes(u_zeta(0))
    assert not f1_vanishes(u_zeta(0.2))
    assert not f1_vanishes(UnitaryMatrix(np.eye(3)))


def test_degenerate_solution_is_totally_geodesic():
    sol = solve_isometry(u_zeta(0), 32)
    assert sol.degenerate
    assert np.max(np.abs(sol.f1.coeffs)) == 0
    # the ball part is linear
    for s in sol.f2:
        assert np.max(np.abs(s.coeffs[2:])) <= 1e-15


def test_solution_functional_equation():
    sol = solve_isometry(u_zeta(0.2), 64)
    assert sol.coefficient_residual <= 1e-10
    assert check_series_solution(sol, samples=200, radius=0.7).max_residual <= 1e-8


def test_solution_at_origin():
    sol = solve_isometry(u_zeta(0.2), 16)
    assert sol.f1.coeffs[0] == 0 and all(s.coeffs[0] == 0 for s in sol.f2)


def test_solution_order_gate():
    with pytest.raises(Rejection):
        solve_isometry(u_zeta(0.2), 1)


def test_solution_is_canonical_under_order_change():
    a, b = solve_isometry(u_zeta(0.2), 32), solve_isometry(u_zeta(0.2), 64)
    assert np.max(np.abs(a.f1.coeffs - b.f1.coeffs[:33])) <= 1e-11
    for s, t in zip(a.f2, b.f2):
        assert np.max(np.abs(s.coeffs - t.coeffs[:33])) <= 1e-11


def test_rational_R_for_two_by_two():
    t = 0.7
    U = UnitaryMatrix(np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]]) * np.exp(0.3j))
    R, _ = rational_R(U)
    assert R.degree == 2
    assert identity_residual(R, solve_isometry(U, 40).f1) <= 1e-10


def test_rational_R_for_u_zeta():
    R, Rj = rational_R(u_zeta(0.2))
    assert R.degree == 3
    assert abs(R(0.0)) <= 1e-14
    # no common roots of numerator and denominator
    zeros, poles = R.zeros(), R.poles()
    assert np.min(np.abs(zeros[:, None] - poles[None])) > 1e-3


def test_rational_R_rejects_degenerate():
    with pytest.raises(Rejection, match="f1 identically zero"):
        rational_R(u_zeta(0))


def test_components_are_rational_in_f1():
    sol = solve_isometry(u_zeta(0.2), 40)
    for Rj, f2 in zip(sol.R_components, sol.f2):
        assert component_identity_residual(Rj, sol.f1, f2) <= 1e-9
    rng = np.random.default_rng(21)
    for n in (1, 2, 3):
        sol = solve_isometry(random_unitary(n + 1, rng), 48)
        for Rj, f2 in zip(sol.R_components, sol.f2):
            assert component_identity_residual(Rj, sol.f1, f2) <= 1e-9


def test_series_composition_agrees_when_well_conditioned():
    # for U_zeta(0.2) the pole of R sits at 0.2, so direct expansion is still usable at low order
    sol = solve_isometry(u_zeta(0.2), 20)
    comp = series_compose(sol.R.series_at(0.0, 20), sol.f1)
    assert np.max(np.abs(comp.coeffs - TruncatedSeries.identity(20).coeffs)) <= 1e-9


def test_blaschke_identity():
    form = blaschke_factorize(RationalMap([0, 1]))
    assert form.alpha0 == 1 and form.roots == ()


def test_blaschke_single_factor():
    z0 = 0.5
    R = RationalMap([0, -1, np.conj(z0)], [-z0, 1])
    form = blaschke_factorize(R)
    assert len(form.roots) == 1 and abs(form.roots[0] - 0.5) < 1e-15
    # the unimodular constant of the product form is beta0; alpha0 is the leading coefficient
    assert abs(form.beta0 - 1) < 1e-15
    assert abs(form.alpha0 - np.conj(z0)) < 1e-15


def test_blaschke_u_zeta():
    R, _ = rational_R(u_zeta(0.2))
    form = blaschke_factorize(R)
    assert len(form.roots) == 2
    z = sample_grid(100, 0.9) * 2.5 + 0.05
    z = z[np.min(np.abs(z[:, None] - np.array(form.roots)[None]), axis=1) > 1e-2]
    assert np.max(np.abs(form.to_rational()(z) - R(z))) <= 1e-10


def test_blaschke_rejects_non_isometric():
    with pytest.raises(Rejection, match="not an isometry-induced rational map"):
        blaschke_factorize(RationalMap([0, 1, 0.3], [0.1, 1]))


def test_peel_single_factor():
    z0 = 0.5
    R = RationalMap([0, -1, np.conj(z0)], [-z0, 1])
    Rt, zeta = peel_factor(R)
    assert abs(zeta - z0) < 1e-15
    z = np.array([0.3, -0.7j, 2.0])
    np.testing.assert_allclose(Rt(z), z, atol=1e-14)


def test_peel_u_zeta_keeps_symmetry():
    R, _ = rational_R(u_zeta(0.2))
    Rt, zeta = peel_factor(R)
    assert Rt.degree == 2
    assert blaschke_symmetry_residual(Rt) <= 1e-10


def test_peel_linear_rejected():
    with pytest.raises(Rejection, match="already linear"):
        peel_factor(RationalMap([0, 1j]))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0, 2 * np.pi), st.floats(0.05, 0.95), st.floats(0, 2 * np.pi))
def test_extend_then_peel_round_trip(r1, t1, r2, t2):
    zeta, other = r1 * np.exp(1j * t1), r2 * np.exp(1j * t2)
    # a double root is only determined to sqrt(eps); keep roots apart
    assume(abs(zeta - other) > 1e-2)
    base = extend_factor(RationalMap([0, 1]), other)
    ext = extend_factor(base, zeta)
    assert ext.degree == base.degree + 1
    assert blaschke_symmetry_residual(ext) <= 1e-9
    Rt, peeled = peel_factor(ext)
    # the ordering rule peels the larger modulus first
    first = zeta if abs(r1 - r2) > 1e-9 and r1 > r2 else (other if abs(r1 - r2) > 1e-9 else peeled)
    assert abs(peeled - first) <= 1e-8
    z = np.array([0.1 + 0.2j, -0.4, 1.7j])
    np.testing.assert_allclose(extend_factor(Rt, peeled)(z), ext(z), rtol=1e-9, atol=1e-9)


def test_normalize_keeps_triangular_input():
    m = u_zeta(0.2).matrix
    assert np.allclose(np.tril(m[1:, 1:], -1), 0)
    np.testing.assert_array_equal(normalize_unitary(u_zeta(0.2)).matrix, m)


def test_normalize_gives_congruent_solution():
    rng = np.random.default_rng(3)
    U = random_unitary(3, rng)
    V = normalize_unitary(U)
    assert np.allclose(np.tril(V.block, -1), 0, atol=1e-12)
    a = blaschke_factorize(rational_R(U)[0]).moduli()
    b = blaschke_factorize(rational_R(V)[0]).moduli()
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_normalize_permutation():
    P = UnitaryMatrix(np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=complex)[:, [0, 2, 1]])
    V = normalize_unitary(P)
    assert np.allclose(np.tril(V.block, -1), 0, atol=1e-12)
    assert np.allclose(np.abs(V.matrix), np.abs(V.matrix).round())


@pytest.mark.parametrize("n", [1, 2, 3])
def test_random_unitaries_have_bounded_degree_and_symmetry(n):
    rng = np.random.default_rng(10 + n)
    for _ in range(5):
        U = random_unitary(n + 1, rng)
        sol = solve_isometry(U, 48)
        assert sol.R.degree <= n + 1
        assert blaschke_symmetry_residual(sol.R) <= 1e-9
        assert identity_residual(sol.R, sol.f1) <= 1e-9


def test_algebraic_evaluation_matches_series():
    sol = solve_isometry(u_zeta(0.2), 64)
    m = UnitarySolvedMap(u_zeta(0.2))
    w = sample_grid(100, 0.7)
    np.testing.assert_allclose(m(w)[:, 0], sol.f1(w), atol=1e-12)
    for j, s in enumerate(sol.f2):
        np.testing.assert_allclose(m(w)[:, j + 1], s(w), atol=1e-12)


def test_solved_json_fields():
    doc = solve_isometry(u_zeta(0.2), 16).to_json()
    assert doc["deg_R"] == 3 and doc["f1_vanishes"] is False
    U = UnitaryMatrix.from_json(doc["unitary"])
    np.testing.assert_array_equal(U.matrix, u_zeta(0.2).matrix)
