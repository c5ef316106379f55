import cmath

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from isoball.domains import ProductSpace
from isoball.errors import Rejection
from isoball.maps import (
    CAYLEY_INV,
    ConstantMap,
    Diagonal,
    FactorizedPolydiskMap,
    PthRoot,
    SharpComposite,
    catalog_construct,
    catalog_forms,
    cayley,
    eval_diagonal,
    eval_pth_root,
    map_from_json,
    sharp_compose,
)
from isoball.verify import block_dependence_check, check_functional_equation, fit_source_constant, sample_grid


def test_cayley_anchors():
    assert cayley("to_halfplane", 0) == 1j
    assert abs(cayley("to_disk", 1j)) < 1e-16


def test_cayley_round_trip():
    z = 0.3 + 0.2j
    assert abs(cayley("to_disk", cayley("to_halfplane", z)) - z) < 1e-15


def test_cayley_inverse_pair_on_random_points():
    rng = np.random.default_rng(0)
    z = 0.99 * np.sqrt(rng.uniform(size=10_000)) * np.exp(2j * np.pi * rng.uniform(size=10_000))
    assert np.max(np.abs(cayley("to_disk", cayley("to_halfplane", z)) - z)) <= 1e-13
    tau = rng.normal(size=10_000) + 1j * rng.uniform(0.01, 10, size=10_000)
    back = cayley("to_halfplane", cayley("to_disk", tau))
    assert np.max(np.abs(back - tau) / np.abs(tau)) <= 1e-13


def test_cayley_rejects_excluded_points():
    with pytest.raises(Rejection):
        cayley("to_halfplane", 1.0)
    with pytest.raises(Rejection):
        cayley("to_disk", -0.5)


def test_raw_square_root_at_origin():
    expected = CAYLEY_INV(np.array([cmath.exp(1j * cmath.pi / 4), cmath.exp(3j * cmath.pi / 4)]))
    np.testing.assert_allclose(eval_pth_root(2, 0), expected, atol=1e-15)


@pytest.mark.parametrize("p", [2, 3, 4, 5, 6])
def test_pth_root_range(p):
    rng = np.random.default_rng(p)
    w = 0.999 * np.sqrt(rng.uniform(size=1000)) * np.exp(2j * np.pi * rng.uniform(size=1000))
    assert np.all(np.abs(eval_pth_root(p, w)) < 1)
    assert np.all(np.abs(PthRoot(p)(w)) < 1)


def test_square_root_identity_at_half():
    F = PthRoot(2)(0.5)
    assert abs((1 - abs(F[0]) ** 2) * (1 - abs(F[1]) ** 2) - 0.75) <= 1e-12


def test_pth_root_rejects_boundary():
    with pytest.raises(Rejection):
        eval_pth_root(3, 1.0)
    with pytest.raises(Rejection):
        PthRoot(3)(np.array([0.2, 1.0]))


def test_normalised_pth_root_at_origin():
    for p in (2, 3, 4):
        f = PthRoot(p)
        assert np.max(np.abs(f(0.0))) < 1e-15
        d = (f(1e-7) - f(-1e-7)) / 2e-7
        assert np.all(np.abs(d.imag) < 1e-7) and np.all(d.real > 0)


def test_diagonal_examples():
    np.testing.assert_array_equal(eval_diagonal(3, 0.4), [0.4, 0.4, 0.4])
    np.testing.assert_array_equal(eval_diagonal(2, 0), [0, 0])
    f = Diagonal(3)
    w = sample_grid(100, 0.9)
    lhs = np.prod(1 - np.abs(f(w)) ** 2, axis=-1)
    assert np.max(np.abs(lhs - (1 - np.abs(w) ** 2) ** 3)) < 1e-15
    assert f.source_constant == 3


def test_sharp_square_roots_into_three_disks():
    h = sharp_compose(PthRoot(2), PthRoot(2), 2)
    assert h.dim == 3
    assert check_functional_equation(h, samples=100).max_residual <= 1e-10


def test_sharp_with_identity_is_unchanged():
    F = PthRoot(3)
    h = sharp_compose(F, Diagonal(1), 2)
    w = sample_grid(50, 0.9)
    np.testing.assert_allclose(h(w), F(w), atol=1e-15)


def test_sharp_diagonals_constant_is_recomputed():
    h = sharp_compose(Diagonal(2), Diagonal(2), 1)
    w = sample_grid(20, 0.9)
    np.testing.assert_allclose(h(w), eval_diagonal(3, w))
    # with unit weights the map is the 3-fold diagonal, k = 3
    assert abs(fit_source_constant(h, ProductSpace.polydisk(3)) - 3) < 1e-12
    # with the weights carried through the composition, k stays 2
    assert abs(fit_source_constant(h) - 2) < 1e-12
    assert check_functional_equation(h).passed


def test_sharp_rejects_bad_slot():
    with pytest.raises(Rejection):
        SharpComposite(PthRoot(2), PthRoot(2), 3)
    with pytest.raises(Rejection):
        SharpComposite(PthRoot(2), PthRoot(2), 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(1, 3), st.data())
def test_sharp_dimension_arithmetic(p, q, data):
    slot = data.draw(st.integers(1, p))
    inner = PthRoot(q) if q >= 2 else Diagonal(1)
    assert sharp_compose(PthRoot(p), inner, slot).dim == p + q - 1


def test_catalog_diagonal_pair():
    f = catalog_construct("bidisk-3", [0.3])
    np.testing.assert_array_equal(f(0.25), [0.25, 0.25])
    assert f.target.constants == (0.3, 0.7)


def test_catalog_fourth_root():
    f = catalog_construct("disk4-k1-a")
    w = sample_grid(30, 0.9)
    np.testing.assert_allclose(f(w), PthRoot(4)(w), atol=1e-15)


def test_catalog_z_zero():
    f = catalog_construct("bidisk-1", [5])
    np.testing.assert_array_equal(f(0.4), [0.4, 0])
    assert f.target.constants == (1.0, 5.0)


def test_catalog_rejections():
    with pytest.raises(Rejection):
        catalog_construct("no-such-form")
    with pytest.raises(Rejection):
        catalog_construct("bidisk-3", [])


def _params(form):
    return {"bidisk-1": [0.7], "bidisk-2": [2.0], "bidisk-3": [0.4], "pth-root": [5], "diagonal": [3],
            "sqrt-chain": [4], "equal-branching": [1, 2, 2]}.get(form, [])


@pytest.mark.parametrize("form", sorted(catalog_forms()))
def test_every_catalog_form_verifies(form):
    f = catalog_construct(form, _params(form))
    rep = check_functional_equation(f, samples=500, radius=0.9)
    assert rep.max_residual <= 1e-10


@pytest.mark.parametrize("p", [2, 3, 4, 5, 6])
def test_root_and_diagonal_families_verify(p):
    assert check_functional_equation(catalog_construct("pth-root", [p])).max_residual <= 1e-10
    assert check_functional_equation(catalog_construct("diagonal", [p])).max_residual <= 1e-10
    assert check_functional_equation(catalog_construct("sqrt-chain", [p])).max_residual <= 1e-10


def test_components_stay_off_the_boundary_on_smaller_disks():
    f = PthRoot(3)
    for r in (0.5, 0.9, 0.99):
        w = r * np.exp(2j * np.pi * np.arange(720) / 720)
        assert np.max(np.abs(f(w))) < 1


def test_constant_map():
    c = ConstantMap([0.5, 0.1j])
    np.testing.assert_array_equal(c(np.array([0.1, 0.2])), [[0.5, 0.1j], [0.5, 0.1j]])
    assert c.source_constant == 0


def test_factorized_polydisk_map():
    F = FactorizedPolydiskMap([PthRoot(2), Diagonal(1)])
    z = np.array([[0.3, 0.1j], [-0.2, 0.5]])
    out = F(z)
    np.testing.assert_allclose(out[:, :2], PthRoot(2)(z[:, 0]))
    np.testing.assert_allclose(out[:, 2], z[:, 1])
    rep = block_dependence_check(F, F.source, F.target)
    assert rep["pattern"] == {1: [1], 2: [1], 3: [2]}


@pytest.mark.parametrize("doc", [
    {"kind": "pth_root", "p": 4},
    {"kind": "diagonal", "p": 3},
    {"kind": "sharp", "outer": {"kind": "pth_root", "p": 2}, "inner": {"kind": "pth_root", "p": 2}, "slot": 2},
    {"kind": "catalog", "form": "bidisk-3", "params": [0.3]},
])
def test_json_descriptors_round_trip(doc):
    f = map_from_json(doc)
    g = map_from_json(f.to_json())
    w = sample_grid(10, 0.8)
    np.testing.assert_array_equal(f(w), g(w))


def test_unknown_descriptor():
    with pytest.raises(ValueError):
        map_from_json({"kind": "spiral"})
