"""Numerical certificates for isometries: functional equations, metric pullback,
properness, congruence and the rational rigidity harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import least_squares

from .domains import DiskAutomorphism, ProductSpace, ball_involution, ddbar_fd
from .errors import Rejection
from .maps import IsometryMap, Mobius
from .monodromy import minimal_polynomial_fit
from .solver import (BlaschkeForm, RationalMap, SolvedIsometry, UnitarySolvedMap, _cluster, _trim,
                     blaschke_factorize)

GOLDEN = (1 + 5**0.5) / 2


def sample_grid(count: int, radius: float = 0.9) -> np.ndarray:
    """Low-discrepancy points in the disk: square-root radii, golden-ratio angles."""
    m = np.arange(count)
    r = radius * np.sqrt((m + 0.5) / count)
    theta = 2 * np.pi * np.mod(m * GOLDEN, 1.0)
    return r * np.exp(1j * theta)


@dataclass
class ResidualReport:
    check: str
    tolerance: float
    max_residual: float
    mean_residual: float
    sample_count: int
    worst_point: complex
    passed: bool
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    samples: np.ndarray | None = None
    residuals: np.ndarray | None = None

    @classmethod
    def from_residuals(cls, check: str, tol: float, points, residuals, notes=None, extra=None,
                       force_fail: bool = False) -> "ResidualReport":
        points = np.asarray(points)
        residuals = np.asarray(residuals, dtype=float)
        if residuals.size == 0:
            return cls(check, tol, math.nan, math.nan, 0, complex("nan"), False,
                       list(notes or []) + ["no valid samples"], dict(extra or {}), points, residuals)
        i = int(np.argmax(residuals))
        worst = points[i] if points.ndim == 1 else complex(points[i, 0])
        mx = float(residuals[i])
        return cls(check, tol, mx, float(np.mean(residuals)), int(residuals.size), complex(worst),
                   bool(mx <= tol and not force_fail), list(notes or []), dict(extra or {}), points, residuals)

    def to_json(self) -> dict:
        doc = {
            "check": self.check,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "sample_count": self.sample_count,
            "worst_point": [self.worst_point.real, self.worst_point.imag],
            "pass": self.passed,
        }
        if self.notes:
            doc["notes"] = self.notes
        if self.extra:
            doc.update(self.extra)
        return doc


def _space(f: IsometryMap, space: ProductSpace | None) -> ProductSpace:
    space = f.target if space is None else space
    if space.dims != f.target.dims:
        raise Rejection("verify", f"space dims {space.dims} do not match map target {f.target.dims}")
    return space


def check_functional_equation(f: IsometryMap, space: ProductSpace | None = None, k: float | None = None,
                              samples: int = 500, tol: float = 1e-10, radius: float = 0.9) -> ResidualReport:
    """``prod (1 - ||F_i(w)||^2)^{mu_i}`` against ``(1 - |w|^2)^k``."""
    space = _space(f, space)
    k = f.source_constant if k is None else float(k)
    w = sample_grid(samples, radius)
    b = space.brackets(f(w))
    notes = []
    outside = np.any(b <= 0, axis=-1)
    if np.any(outside):
        notes.append("not into the domain")
    with np.errstate(invalid="ignore"):
        lhs = np.prod(np.where(b > 0, b, np.nan) ** np.asarray(space.constants), axis=-1)
    rhs = (1 - np.abs(w) ** 2) ** k
    res = np.abs(lhs - rhs)
    res = np.where(outside, np.inf, res)
    return ResidualReport.from_residuals(
        "functional_equation", tol, w, res, notes,
        {"k": k, "constants": list(space.constants), "radius": radius}, force_fail=bool(np.any(outside)),
    )


def check_series_solution(solved: SolvedIsometry, samples: int = 500, radius: float = 0.7,
                          tol: float = 1e-8) -> ResidualReport:
    """Functional equation for the truncated series of a solved map, pointwise on ``|w| <= radius``."""
    w = sample_grid(samples, radius)
    f1 = solved.f1(w)
    f2 = np.stack([s(w) for s in solved.f2], axis=-1)
    lhs = (1 - np.abs(f1) ** 2) * (1 - np.sum(np.abs(f2) ** 2, axis=-1))
    res = np.abs(lhs - (1 - np.abs(w) ** 2))
    return ResidualReport.from_residuals("series_functional_equation", tol, w, res, None,
                                         {"order": solved.order, "radius": radius})


def polarized_pairs(count: int, radius: float = 0.6, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = radius * np.sqrt(rng.uniform(size=(count, 2))) * np.exp(2j * np.pi * rng.uniform(size=(count, 2)))
    return pts


def check_polarized(f: IsometryMap, space: ProductSpace | None = None, pairs=None, k: float | None = None,
                    tol: float = 1e-10) -> ResidualReport:
    """``prod (1 - F_i(Z) . conj F_i(W))^{mu_i}`` against ``(1 - Z conj W)^k`` with principal powers.

    Setting ``W = Z`` gives back the plain functional equation. Pairs where a
    factor leaves the right half-plane are dropped and reported.
    """
    space = _space(f, space)
    k = f.source_constant if k is None else float(k)
    pairs = polarized_pairs(50) if pairs is None else np.asarray(pairs, dtype=complex).reshape(-1, 2)
    if np.any(np.abs(pairs) > 0.6 + 1e-12):
        raise Rejection("check_polarized", "pairs must satisfy |Z|, |W| <= 0.6")
    Z, W = pairs[:, 0], pairs[:, 1]
    b = space.polarized_brackets(f(Z), f(W))
    base = 1 - Z * np.conj(W)
    ok = np.all(b.real > 0, axis=-1) & (base.real > 0)
    notes = [] if np.all(ok) else [f"{int(np.sum(~ok))} pair(s) rejected: factor outside the right half-plane"]
    lhs = np.prod(np.exp(np.log(b[ok]) * np.asarray(space.constants)), axis=-1)
    rhs = np.exp(k * np.log(base[ok]))
    return ResidualReport.from_residuals("polarized", tol, pairs[ok], np.abs(lhs - rhs), notes,
                                         {"k": k, "rejected": int(np.sum(~ok))})


def check_metric_pullback(f: IsometryMap, space: ProductSpace | None = None, points=None,
                          k: float | None = None, h: float = 1e-4, tol: float = 1e-5) -> ResidualReport:
    """Relative gap between ``dd^c`` of the pulled-back potential and ``k`` times the disk metric.

    The finite difference acts on ``sum mu_i phi_i(F_i) - k phi(w)``, which
    vanishes identically for an isometry, so cancellation error stays at
    rounding level divided by ``h^2``.
    """
    space = _space(f, space)
    k = f.source_constant if k is None else float(k)
    points = sample_grid(50, 0.8) if points is None else np.asarray(points, dtype=complex).reshape(-1)
    keep = np.abs(points) < 1 - 2 * h
    notes = [] if np.all(keep) else [f"{int(np.sum(~keep))} point(s) within 2h of the boundary rejected"]
    pts = points[keep]

    def gap(w):
        return space.potential(f(w)) + k * np.log(1 - np.abs(w) ** 2)

    exact = k / (1 - np.abs(pts) ** 2) ** 2
    scale = np.where(exact > 0, exact, 1 / (1 - np.abs(pts) ** 2) ** 2)
    res = np.abs(ddbar_fd(gap, pts, h)) / scale
    pulled = ddbar_fd(lambda w: space.potential(f(w)), pts, h)
    return ResidualReport.from_residuals(
        "metric_pullback", tol, pts, res, notes,
        {"k": k, "h": h, "normalization": "d2/dz dzbar of -log(1-|z|^2), no factor 2",
         "metric_ratio_mean": float(np.mean(pulled / exact)) if k > 0 and pts.size else None},
    )


@dataclass
class PropernessReport:
    radii: list[float]
    minima: list[float]
    omitted: list[float]
    increasing: bool
    final_gap: float
    gate: float
    proper: bool

    def to_json(self) -> dict:
        return {
            "check": "properness",
            "radii": self.radii,
            "minima": self.minima,
            "omitted": self.omitted,
            "increasing": self.increasing,
            "final_gap": self.final_gap,
            "gate": self.gate,
            "verdict": "proper" if self.proper else "not proper",
            "pass": self.proper,
        }


DEFAULT_RADII = (0.5, 0.8, 0.9, 0.95, 0.99, 0.995, 0.999)


def check_properness(component, radii=DEFAULT_RADII, angles: int = 720, gate: float = 0.01) -> PropernessReport:
    """Minimum of ``||component||`` on circles approaching the boundary.

    ``component`` maps an array of points to an array ``(..., m)`` (or scalars
    for a disk). Non-finite values mark unreliable evaluation; that radius is
    omitted.
    """
    theta = 2 * np.pi * np.arange(angles) / angles
    used, minima, omitted = [], [], []
    for r in radii:
        vals = np.asarray(component(r * np.exp(1j * theta)), dtype=complex)
        norms = np.abs(vals) if vals.ndim == 1 else np.linalg.norm(vals, axis=-1)
        if not np.all(np.isfinite(norms)):
            omitted.append(float(r))
            continue
        used.append(float(r))
        minima.append(float(np.min(norms)))
    increasing = len(minima) >= 2 and all(b > a for a, b in zip(minima, minima[1:]))
    final_gap = 1 - minima[-1] if minima else math.inf
    return PropernessReport(used, minima, omitted, increasing, final_gap, gate,
                            bool(increasing and final_gap <= gate))


# congruence -------------------------------------------------------------------------

@dataclass
class CongruenceVerdict:
    verdict: str
    witness: dict | None
    invariants: dict
    residual: float | None = None

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "witness": self.witness, "invariants": self.invariants, "residual": self.residual}


def _as_map(f):
    if isinstance(f, SolvedIsometry):
        return f.map()
    if isinstance(f, (UnitarySolvedMap, ReparametrizedMap)):
        return f
    raise Rejection("congruence_test", f"expected a solved isometry, got {type(f).__name__}")


def blaschke_invariants(form: BlaschkeForm) -> dict:
    """Moduli of the Blaschke data. Invariant under rotations only, reported for reference."""
    return {"moduli": form.moduli(), "alpha0_modulus": float(abs(form.alpha0)), "degree": len(form.roots) + 1}


def _pseudo_distance(a: complex, b: complex) -> float:
    return float(abs(a - b) / abs(1 - np.conj(a) * b))


def _reflect_into_disk(v: complex) -> complex:
    if not np.isfinite(v):
        return 0j
    return 1 / np.conj(v) if abs(v) > 1 else v


def critical_configuration(R: RationalMap, tol: float = 1e-6) -> dict:
    """Critical points of ``R`` in the disk with local degrees, their critical values
    reflected into the disk, and pairwise pseudo-hyperbolic distances of both sets.

    Reparametrizing ``f`` by disk automorphisms changes ``R`` to
    ``sigma^-1 o R o phi^-1``, which moves critical points by ``phi`` and
    critical values by ``sigma^-1``; both commute with reflection in the circle,
    so the distance lists are congruence invariants.
    """
    w = _trim(P.polysub(P.polymul(P.polyder(R.num), R.den), P.polymul(R.num, P.polyder(R.den))))
    roots = _cluster(P.polyroots(w)) if w.size > 1 else np.zeros(0, dtype=complex)
    poles = _cluster(R.poles())
    points: list[tuple[complex, int]] = []
    for group in _groups(poles, tol):
        if len(group) >= 2 and abs(group[0]) < 1:
            points.append((group[0], len(group)))
    for group in _groups(roots, tol):
        c = group[0]
        if abs(c) < 1 and (poles.size == 0 or np.min(np.abs(poles - c)) > tol):
            points.append((c, len(group) + 1))
    values = [(_reflect_into_disk(complex(R(np.array([c]))[0])) if not any(abs(c - q) <= tol for q in poles)
               else 0j, d) for c, d in points]

    def distances(items):
        out = []
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                (a, da), (b, db) = items[i], items[j]
                out.append((min(da, db), max(da, db), _pseudo_distance(a, b)))
        return sorted(out)

    return {
        "degree": R.degree,
        "local_degrees": sorted(d for _, d in points),
        "point_distances": distances(points),
        "value_distances": distances(values),
    }


def _groups(roots: np.ndarray, tol: float) -> list[list[complex]]:
    groups: list[list[complex]] = []
    for r in np.asarray(roots, dtype=complex):
        for g in groups:
            if abs(g[0] - r) <= tol:
                g.append(r)
                break
        else:
            groups.append([r])
    return groups


def _configurations_match(a: dict, b: dict, tol: float = 1e-6) -> bool:
    if a["degree"] != b["degree"] or a["local_degrees"] != b["local_degrees"]:
        return False
    for key in ("point_distances", "value_distances"):
        if len(a[key]) != len(b[key]):
            return False
        for x, y in zip(a[key], b[key]):
            if x[:2] != y[:2] or abs(x[2] - y[2]) > tol:
                return False
    return True


class ReparametrizedMap:
    """``Psi o f o sigma`` renormalized so that the origin is fixed.

    ``Psi`` is the disk automorphism plus ball involution sending
    ``f(sigma(0))`` to the origin; ``R`` transforms as ``sigma^-1 o R o phi^-1``.
    """

    def __init__(self, base: UnitarySolvedMap, sigma: DiskAutomorphism):
        self.base, self.sigma = base, sigma
        self.U = base.U
        self.degenerate = base.degenerate
        self.target = base.target
        self.source_constant = base.source_constant
        self.dim = base.dim
        h0 = base(np.array([sigma(0.0)]))[0]
        self.phi = DiskAutomorphism(complex(h0[0]), 0.0)
        self.ball_center = h0[1:]
        self.R = base.R.compose_mobius(Mobius(*sigma.inverse().mobius()), Mobius(*self.phi.inverse().mobius()))

    def __call__(self, w):
        h = np.asarray(self.base(self.sigma(np.asarray(w, dtype=complex))))
        return np.concatenate([self.phi(h[..., :1]), ball_involution(self.ball_center, h[..., 1:])], axis=-1)


WITNESS_TOL = 1e-8


def _target_fit(h: np.ndarray, g: np.ndarray, h0: np.ndarray, n: int):
    """Best target automorphism sending ``h`` (with ``h(0) = h0``) onto ``g``.

    Disk part: the automorphism moving ``h0[0]`` to 0, then the best phase.
    Ball part: the involution at ``h0[1:]`` then the Procrustes unitary.
    """
    a1 = complex(h0[0])
    m1 = (h[:, 0] - a1) / (1 - np.conj(a1) * h[:, 0])
    s = np.vdot(m1, g[:, 0])
    phase = s / abs(s) if abs(s) > 1e-300 else 1.0
    disk = phase * m1
    a2 = h0[1:]
    x = ball_involution(a2, h[:, 1:])
    u, _, vh = np.linalg.svd(g[:, 1:].T @ x.conj())
    V = u @ vh
    ball = x @ V.T
    out = np.concatenate([disk[:, None], ball], axis=1)
    return out, {"disk": {"a": [a1.real, a1.imag], "theta": float(np.angle(phase))},
                 "ball": {"a": [[v.real, v.imag] for v in a2], "unitary": [[[v.real, v.imag] for v in row] for row in V]}}


def _witness_residual(F: UnitarySolvedMap, G: UnitarySolvedMap, params, w, gw, swap: bool):
    u = complex(params[0], params[1])
    a = u / math.sqrt(1 + abs(u) ** 2)
    sigma = DiskAutomorphism(a, params[2])
    h = F(sigma(w))
    h0 = F(sigma(0.0))
    if swap:
        h, h0 = h[:, ::-1], h0[::-1]
    fitted, info = _target_fit(h, gw, h0, F.U.n)
    return fitted - gw, sigma, info


def congruence_test(f, g, starts: int = 8) -> CongruenceVerdict:
    """Compare congruence invariants of ``R``; if they agree, search for a witness ``g = Psi o f o sigma``.

    The invariants (critical configuration of ``R`` up to disk automorphisms)
    are a necessary filter only; matching invariants without a witness give
    "inconclusive". The Blaschke moduli are reported but not used to decide,
    since they change under non-rotational reparametrization. For ``n = 1``
    the target factors may be swapped, which the ``R`` of ``f1`` does not see,
    so a mismatch there only yields "inconclusive" when no witness is found.
    """
    F, G = _as_map(f), _as_map(g)
    if F.degenerate or G.degenerate:
        raise Rejection("congruence_test", "f1 is constant; compare as totally geodesic ball maps instead")
    if F.U.n != G.U.n:
        raise Rejection("congruence_test", "maps must have the same ball dimension")
    conf_f, conf_g = critical_configuration(F.R), critical_configuration(G.R)
    invariants = {
        "f": {**blaschke_invariants(blaschke_factorize(F.R)), "critical_configuration": conf_f},
        "g": {**blaschke_invariants(blaschke_factorize(G.R)), "critical_configuration": conf_g},
    }
    match = _configurations_match(conf_f, conf_g)
    if not match and F.U.n > 1:
        return CongruenceVerdict("incongruent", None, invariants)
    w = sample_grid(24, 0.5)
    gw = G(w)
    best = (math.inf, None)
    swaps = ((False, True) if match else (True,)) if F.U.n == 1 else (False,)
    grid = [(0.0, 0.0)] + [(r * math.cos(t), r * math.sin(t)) for r in (0.3, 0.6, 1.0, 1.6) for t in np.arange(6) * np.pi / 3]
    thetas = 2 * np.pi * np.arange(starts) / starts
    for swap in swaps:
        for ux, uy in grid:
            for th in thetas:
                def fun(p):
                    diff, _, _ = _witness_residual(F, G, p, w, gw, swap)
                    return np.concatenate([diff.real.ravel(), diff.imag.ravel()])

                x0 = np.array([ux, uy, th])
                if np.max(np.abs(fun(x0))) > 0.5 and (ux, uy) != (0.0, 0.0):
                    continue
                sol = least_squares(fun, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
                diff, sigma, info = _witness_residual(F, G, sol.x, w, gw, swap)
                # confirm on fresh points
                wc = sample_grid(60, 0.8)
                diff_c, _, _ = _witness_residual(F, G, sol.x, wc, G(wc), swap)
                res = float(np.max(np.abs(diff_c)))
                if res < best[0]:
                    best = (res, {"source": {"a": [sigma.a.real, sigma.a.imag], "theta": sigma.theta},
                                  "target": info, "swap_factors": swap})
                if res <= WITNESS_TOL:
                    return CongruenceVerdict("congruent", best[1], invariants, res)
    return CongruenceVerdict("inconclusive", None, invariants, best[0] if math.isfinite(best[0]) else None)


# rigidity harness ---------------------------------------------------------------------

def _is_constant(values: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(values - values[:1])) <= tol)


def _fit_disk_automorphism(norm_sq: np.ndarray, w: np.ndarray):
    """Fit ``a`` with ``||F_j(w)||^2 = |(w - a)/(1 - conj(a) w)|^2``; returns (a, max residual)."""
    start = w[int(np.argmin(norm_sq))]

    def fun(p):
        a = complex(p[0], p[1])
        return np.abs((w - a) / (1 - np.conj(a) * w)) ** 2 - norm_sq

    sol = least_squares(fun, [start.real, start.imag], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return complex(sol.x[0], sol.x[1]), float(np.max(np.abs(fun(sol.x))))


def rational_rigidity_check(f: IsometryMap, space: ProductSpace | None = None, tol: float = 1e-10,
                            max_dz: int = 4, max_dw: int = 4) -> dict:
    """Classify components as rational or not and, when all are rational, test total geodesy.

    A rational isometry whose non-constant factors are not all totally
    geodesic, or whose constants do not add up to ``k``, contradicts
    rational rigidity and is reported as a contradiction.
    """
    space = _space(f, space)
    w = sample_grid(200, 0.9)
    vals = f(w)
    components = []
    for j in range(f.dim):
        if _is_constant(vals[:, j]):
            components.append({"index": j, "class": "constant"})
            continue
        fit = minimal_polynomial_fit(lambda x, j=j: f(x)[..., j], max_dz=max_dz, max_dw=max_dw, sheets=(f, j))
        if not fit.determined:
            components.append({"index": j, "class": "undetermined"})
        else:
            components.append({"index": j, "class": "rational" if fit.z_degree == 1 else "irrational",
                               "z_degree": fit.z_degree, "w_degree": fit.w_degree})
    classes = {c["class"] for c in components}
    fe = check_functional_equation(f, space, tol=tol)
    report = {
        "check": "rational_rigidity",
        "components": components,
        "isometry": fe.passed,
        "all_rational": classes <= {"rational", "constant"},
        "hypothesis_triggered": False,
        "contradiction": False,
        "verdict": "not applicable",
    }
    if "undetermined" in classes:
        report["verdict"] = "undetermined"
        return report
    if not (report["all_rational"] and fe.passed):
        return report
    report["hypothesis_triggered"] = True
    factors = []
    nonconstant_weight = 0.0
    for i, sl in enumerate(space.slices()):
        block = vals[:, sl]
        if _is_constant(block):
            factors.append({"factor": i, "constant": True})
            continue
        nonconstant_weight += space.constants[i]
        a, res = _fit_disk_automorphism(np.sum(np.abs(block) ** 2, axis=-1), w)
        factors.append({"factor": i, "constant": False, "automorphism_a": [a.real, a.imag],
                        "totally_geodesic": bool(res <= 1e-9), "residual": res})
    k = f.source_constant
    sum_ok = abs(nonconstant_weight - k) <= tol
    tg_ok = all(fac.get("totally_geodesic", True) for fac in factors)
    report.update(factors=factors, constant_sum=nonconstant_weight, k=k, constant_sum_ok=bool(sum_ok),
                  contradiction=bool(not (sum_ok and tg_ok)),
                  verdict="totally geodesic" if sum_ok and tg_ok else "contradiction")
    return report


def block_dependence_check(F, source: ProductSpace, target: ProductSpace, samples: int = 8,
                           h: float = 1e-6, threshold: float = 1e-8, seed: int = 3) -> dict:
    """Which source block each target factor depends on, by finite differences.

    ``F`` maps an array ``(..., source.total_dim)`` to ``(..., target.total_dim)``.
    """
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(samples):
        z = []
        for d in source.dims:
            v = rng.normal(size=d) + 1j * rng.normal(size=d)
            z.append(0.5 * rng.uniform() * v / np.linalg.norm(v))
        pts.append(np.concatenate(z))
    pts = np.array(pts)
    src_slices, tgt_slices = source.slices(), target.slices()
    sens = np.zeros((len(tgt_slices), len(src_slices)))
    for jb, ss in enumerate(src_slices):
        for c in range(ss.start, ss.stop):
            for step in (h, 1j * h):
                e = np.zeros(source.total_dim, dtype=complex)
                e[c] = step
                diff = (np.asarray(F(pts + e)) - np.asarray(F(pts - e))) / (2 * h)
                for ib, ts in enumerate(tgt_slices):
                    sens[ib, jb] = max(sens[ib, jb], float(np.max(np.abs(diff[:, ts]))))
    pattern = {}
    factored = True
    for ib in range(len(tgt_slices)):
        deps = [jb + 1 for jb in range(len(src_slices)) if sens[ib, jb] > threshold]
        pattern[ib + 1] = deps
        if len(deps) > 1:
            factored = False
    return {
        "check": "block_dependence",
        "pattern": pattern,
        "factored": factored,
        "verdict": "factored" if factored else "not of factored form",
        "sum_target_constants": float(sum(target.constants)),
        "sum_source_constants": float(sum(source.constants)),
        "constant_sums_equal": bool(abs(sum(target.constants) - sum(source.constants)) <= 1e-10),
    }


def fit_source_constant(f: IsometryMap, space: ProductSpace | None = None, samples: int = 200) -> float:
    """Least-squares ``k`` in ``sum mu_i log(1 - ||F_i||^2) = k log(1 - |w|^2)``."""
    space = _space(f, space)
    w = sample_grid(samples, 0.9)
    lhs = -space.potential(f(w))
    x = np.log(1 - np.abs(w) ** 2)
    return float(np.dot(x, lhs) / np.dot(x, x))
