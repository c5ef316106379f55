"""The ten acceptance criteria, each printing one PASS/FAIL line."""

import time

import numpy as np
import pytest

from isoball.domains import det_minor_expansion
from isoball.maps import Diagonal, PthRoot, catalog_construct, sharp_compose
from isoball.monodromy import minimal_polynomial_fit, sheeting_report
from isoball.solver import (
    UnitarySolvedMap,
    blaschke_factorize,
    blaschke_symmetry_residual,
    f1_vanishes,
    inverse_identity_residual,
    random_unitary,
    solve_isometry,
    u_zeta,
)
from isoball.verify import (
    check_functional_equation,
    check_metric_pullback,
    check_properness,
    check_series_solution,
    congruence_test,
    rational_rigidity_check,
    sample_grid,
)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def test_criterion_01_canonical_maps(report):
    worst_root, worst_diag, slowest = 0.0, 0.0, 0.0
    ok = True
    for p in range(2, 7):
        for f, k, tol in ((PthRoot(p), 1, 1e-10), (Diagonal(p), p, 1e-13)):
            t = time.perf_counter()
            rep = check_functional_equation(f, k=k, samples=500, radius=0.9, tol=tol)
            slowest = max(slowest, time.perf_counter() - t)
            ok &= rep.passed
            if k == 1:
                worst_root = max(worst_root, rep.max_residual)
            else:
                worst_diag = max(worst_diag, rep.max_residual)
    ok &= slowest < 1.0
    report(1, ok, f"root maps {worst_root:.1e}, diagonals {worst_diag:.1e}, slowest {slowest:.2f}s")


def test_criterion_02_solver(report):
    sol = solve_isometry(u_zeta(0.2), 64)
    point = check_series_solution(sol, samples=500, radius=0.7, tol=1e-8)
    inverse = inverse_identity_residual(sol.R, sol.f1)
    ok = point.passed and inverse <= 1e-9 and sol.R.degree <= 3
    report(2, ok, f"pointwise {point.max_residual:.1e}, R(f1) = w {inverse:.1e}, deg R {sol.R.degree}")


def test_criterion_03_degeneracy(report):
    U = u_zeta(0)
    m = UnitarySolvedMap(U)
    metric = check_metric_pullback(m, points=sample_grid(50, 0.8), tol=1e-8)
    w = sample_grid(200, 0.9)
    vals = m(w)
    geodesic = float(np.max(np.abs(np.sum(np.abs(vals[:, 1:]) ** 2, axis=1) - np.abs(w) ** 2)))
    ok = f1_vanishes(U) and metric.passed and np.max(np.abs(vals[:, 0])) == 0 and geodesic <= 1e-12
    report(3, ok, f"f1 vanishes {f1_vanishes(U)}, pullback {metric.max_residual:.1e}, ball norm gap {geodesic:.1e}")


def test_criterion_04_blaschke_symmetry(report):
    rng = np.random.default_rng(2024)
    worst_sym, worst_rec, count = 0.0, 0.0, 0
    z = sample_grid(100, 0.95) * 1.8
    while count < 50:
        n = 1 + count % 3
        U = random_unitary(n + 1, rng)
        if abs(np.linalg.det(U.block)) < 1e-6:
            continue
        R = solve_isometry(U, 24).R
        worst_sym = max(worst_sym, blaschke_symmetry_residual(R, z))
        rebuilt = blaschke_factorize(R).to_rational()
        poles = R.poles()
        keep = z if poles.size == 0 else z[np.min(np.abs(z[:, None] - poles[None]), axis=1) > 1e-2]
        rel = np.abs(rebuilt(keep) - R(keep)) / np.maximum(1.0, np.abs(R(keep)))
        worst_rec = max(worst_rec, float(np.max(rel)))
        count += 1
    ok = worst_sym <= 1e-9 and worst_rec <= 1e-10
    report(4, ok, f"50 unitaries, symmetry {worst_sym:.1e}, reconstruction {worst_rec:.1e}")


def test_criterion_05_sheeting(report):
    cases = [(PthRoot(p), 1, p, [p] * p) for p in (2, 3, 4, 5)]
    cases += [(Diagonal(p), p, 1, [1] * p) for p in (2, 3)]
    cases.append((sharp_compose(PthRoot(2), PthRoot(2), 2), 1, 4, [2, 4, 4]))
    ok, slowest, seen = True, 0.0, []
    for f, k, n, s in cases:
        t = time.perf_counter()
        rep = sheeting_report(f, k)
        slowest = max(slowest, time.perf_counter() - t)
        ok &= rep.n == n and rep.s == s and all(rep.identities.values())
        seen.append(f"{rep.n}/{rep.s}")
    ok &= slowest < 30
    report(5, ok, f"{', '.join(seen)}; slowest {slowest:.1f}s")


def test_criterion_06_congruence_family(report):
    params = [r * np.exp(1j * t) for r in (0.1, 0.2, 0.25) for t in (0.0, 1.3)] + [0.2j]
    maps = [UnitarySolvedMap(u_zeta(z)) for z in params]
    pairs = [(i, j) for i in range(len(maps)) for j in range(i + 1, len(maps))][:20]
    wrong, inconclusive = 0, 0
    for i, j in pairs:
        verdict = congruence_test(maps[i], maps[j]).verdict
        expected = "congruent" if abs(abs(params[i]) - abs(params[j])) < 1e-12 else "incongruent"
        inconclusive += verdict == "inconclusive"
        wrong += verdict != expected
    ok = len(pairs) == 20 and wrong == 0 and inconclusive == 0
    report(6, ok, f"{len(pairs)} pairs, {wrong} mismatches, {inconclusive} inconclusive")


def test_criterion_07_proper_and_irrational(report):
    m = UnitarySolvedMap(u_zeta(0.2))
    prop = check_properness(lambda w: m(w)[..., 1:])
    at_999 = prop.minima[prop.radii.index(0.999)]
    degrees = []
    for j in (1, 2):
        fit = minimal_polynomial_fit(lambda w, j=j: m(w)[..., j], max_dz=4, max_dw=4, sheets=(m, j))
        degrees.append(fit.z_degree)
    ok = prop.increasing and 1 - at_999 <= 0.01 and all(d is not None and d >= 2 for d in degrees)
    report(7, ok, f"minima increasing {prop.increasing}, 1 - m(0.999) = {1 - at_999:.1e}, z-degrees {degrees}")


def test_criterion_08_bergman_identity(report):
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(200):
        p, q = sorted(rng.integers(1, 5, size=2))
        Z = rng.normal(size=(p, q)) + 1j * rng.normal(size=(p, q))
        Z *= rng.uniform(0, 0.999) / np.linalg.norm(Z, 2)
        lhs, rhs = det_minor_expansion(Z)
        worst = max(worst, abs(lhs - rhs))
    report(8, worst <= 1e-12, f"200 matrices, max gap {worst:.1e}")


def test_criterion_09_bidisk_catalog(report):
    # the perturbed constant is that of a non-constant factor (a constant factor's weight is free)
    forms = {"bidisk-1": ([2.0], 0), "bidisk-2": ([2.0], 1), "bidisk-3": ([0.3], 0), "bidisk-4": ([], 0)}
    ok, lines = True, []
    for name, (params, slot) in forms.items():
        f = catalog_construct(name, params)
        base = check_functional_equation(f)
        flips = []
        for delta in (0.05, -0.05):
            c = list(f.target.constants)
            c[slot] += delta
            flips.append(not check_functional_equation(f, f.target.with_constants(c)).passed)
        ok &= base.passed and all(flips)
        lines.append(f"{name} {base.max_residual:.0e}/{'flips' if all(flips) else 'STAYS'}")
    report(9, ok, ", ".join(lines))


def test_criterion_10_rational_rigidity(report):
    maps = [catalog_construct("bidisk-3", [lam]) for lam in (0.2, 0.5, 0.8)]
    maps += [catalog_construct("bidisk-1", [0.7]), catalog_construct("bidisk-2", [3.0])]
    maps += [Diagonal(p) for p in (1, 2, 3)]
    contradictions, verdicts = 0, []
    for f in maps:
        rep = rational_rigidity_check(f)
        contradictions += rep["contradiction"]
        verdicts.append(rep["verdict"])
    ok = contradictions == 0 and all(v == "totally geodesic" for v in verdicts)
    report(10, ok, f"{len(maps)} rational isometries, {contradictions} contradictions")
