"""Analytic continuation of germs, monodromy orbits and sheeting numbers.

Continuation works on the sheet-state interface of :mod:`isoball.maps`:
each step evaluates the current germ at the next point, snaps to the
nearest exact sheet there and rebuilds the germ from the map's closed form,
so errors never accumulate along a path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Rejection
from .maps import IsometryMap, chordal
from .series import TruncatedSeries, radius_estimate

GERM_ORDER = 24
EQUAL_TERMS = 16
EQUAL_TOL = 1e-7
MIN_STEP = 1e-6
SNAP_TOL = 1e-6
FIT_TOL = 1e-10
CAVEAT = "assumes the extension curve of each component and of the map is irreducible"


@dataclass(frozen=True, eq=False)
class Germ:
    """Component germs of a map at a common center, with the sheet state they came from."""

    components: tuple[TruncatedSeries, ...]
    state: object = None

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a germ needs at least one component")
        c, n = comps[0].center, comps[0].order
        if any(s.center != c or s.order != n for s in comps):
            raise ValueError("germ components must share center and order")
        object.__setattr__(self, "components", comps)

    @property
    def center(self) -> complex:
        return self.components[0].center

    @property
    def order(self) -> int:
        return self.components[0].order

    def values(self) -> np.ndarray:
        return np.array([s.coeffs[0] for s in self.components])

    def __call__(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return np.stack([s(w) for s in self.components], axis=-1)

    def distance(self, other: "Germ", terms: int = EQUAL_TERMS) -> float:
        """Max relative coefficient gap over the first ``terms`` coefficients."""
        if abs(self.center - other.center) > 1e-12 or len(self.components) != len(other.components):
            return math.inf
        gap = 0.0
        for a, b in zip(self.components, other.components):
            x, y = a.coeffs[:terms], b.coeffs[:terms]
            gap = max(gap, float(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(x)))))
        return gap

    def to_json(self) -> dict:
        return {"center": [self.center.real, self.center.imag], "components": [s.to_json() for s in self.components]}


def germ_at(f: IsometryMap, center: complex, order: int = GERM_ORDER, anchor=None) -> Germ:
    center = complex(center)
    state = f.principal_state(center) if anchor is None else f.nearest_state(center, anchor)
    return Germ(tuple(f.apply_series(state, TruncatedSeries.identity(order, center))), state)


def branch_points(f: IsometryMap) -> np.ndarray:
    """Finite branch points of ``f`` over all sheets."""
    return np.asarray(f.branch_points(), dtype=complex)


def _germ_radius(germ: Germ) -> float:
    radii = [radius_estimate(s) for s in germ.components]
    return min(radii) if radii else math.inf


def continue_germ(f: IsometryMap, germ: Germ, path, branch=None) -> Germ:
    """Continue ``germ`` along the polyline ``path`` (which starts at the germ's center)."""
    pts = [complex(p) for p in np.atleast_1d(np.asarray(path, dtype=complex))]
    if not pts:
        return germ
    if abs(pts[0] - germ.center) > 1e-12:
        raise Rejection("continue_germ", "path must start at the germ center")
    branch = branch_points(f) if branch is None else np.asarray(branch, dtype=complex)
    order = germ.order
    state = germ.state if germ.state is not None else f.nearest_state(germ.center, germ.values())
    current = germ
    x = germ.center
    for seg_end in pts[1:]:
        while abs(seg_end - x) > 0:
            d_branch = float(np.min(np.abs(branch - x))) if branch.size else math.inf
            h = 0.5 * min(d_branch, _germ_radius(current), 1.0)
            while True:
                if h < MIN_STEP:
                    raise Rejection(
                        "continue_germ",
                        f"step gating impossible on segment {x:.6g} -> {seg_end:.6g} (too close to a branch point)",
                    )
                dist = abs(seg_end - x)
                x_new = seg_end if dist <= h else x + h * (seg_end - x) / dist
                anchor = current(x_new)
                state = f.nearest_state(x_new, anchor)
                if np.max(chordal(f.state_value(state), anchor)) <= SNAP_TOL:
                    break
                h *= 0.5
            comps = f.apply_series(state, TruncatedSeries.identity(order, x_new))
            current = Germ(tuple(comps), state)
            x = x_new
    return current


# loops ---------------------------------------------------------------------------

def _circle(center: complex, radius: float, start_angle: float, steps: int = 64) -> list[complex]:
    t = start_angle + 2 * np.pi * np.arange(steps + 1) / steps
    return list(center + radius * np.exp(1j * t))


def monodromy_loops(branch, base: complex, outer_min: float = 4.0) -> list[list[complex]]:
    """Lassos from ``base`` around each branch point plus one large loop enclosing them all."""
    branch = np.asarray(branch, dtype=complex)
    loops = []
    if branch.size:
        if branch.size > 1:
            pair = np.abs(branch[:, None] - branch[None, :])
            rho = 0.5 * float(np.min(pair[np.triu_indices(branch.size, 1)]))
        else:
            rho = 0.5
        rho = min(rho, 0.5 * float(np.min(np.abs(branch - base))))
        for b in branch:
            phi = float(np.angle(base - b))
            entry = b + rho * np.exp(1j * phi)
            loops.append([base, entry] + _circle(b, rho, phi)[1:] + [base])
    big = max(outer_min, 2 * float(np.max(np.abs(branch)))) if branch.size else outer_min
    phi = float(np.angle(base)) if base != 0 else 0.0
    entry = big * np.exp(1j * phi)
    loops.append([base, entry] + _circle(0, big, phi, 128)[1:] + [base])
    return loops


@dataclass
class Orbit:
    germs: list[Germ]
    overflow: bool
    base: complex


def monodromy_orbit(f: IsometryMap, base: complex = 0.1234 + 0.0567j, cap: int = 64,
                    order: int = GERM_ORDER) -> Orbit:
    """All germs over ``base`` reachable from the principal germ by continuation loops."""
    branch = branch_points(f)
    loops = monodromy_loops(branch, base)
    start = germ_at(f, base, order)
    orbit = [start]
    queue = [start]
    while queue:
        g = queue.pop(0)
        for loop in loops:
            h = continue_germ(f, g, loop, branch)
            if all(h.distance(o) > EQUAL_TOL for o in orbit):
                orbit.append(h)
                queue.append(h)
                if len(orbit) > cap:
                    return Orbit(orbit, True, base)
    return Orbit(orbit, False, base)


def component_orbit_sizes(orbit: Orbit) -> list[int]:
    """Number of distinct germs of each component within the tuple orbit."""
    sizes = []
    for j in range(len(orbit.germs[0].components)):
        distinct: list[TruncatedSeries] = []
        for g in orbit.germs:
            s = g.components[j]
            if all(
                np.max(np.abs(s.coeffs[:EQUAL_TERMS] - d.coeffs[:EQUAL_TERMS]) / np.maximum(1.0, np.abs(d.coeffs[:EQUAL_TERMS])))
                > EQUAL_TOL
                for d in distinct
            ):
                distinct.append(s)
        sizes.append(len(distinct))
    return sizes


# minimal polynomials ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MinimalPolynomial:
    """``P(w, z) = sum coeffs[a, b] w^a z^b`` with ``P(w, f(w)) = 0``; ``None`` coefficients if undetermined."""

    coeffs: np.ndarray | None
    sigma_ratio: float

    @property
    def determined(self) -> bool:
        return self.coeffs is not None

    @property
    def z_degree(self) -> int | None:
        return None if self.coeffs is None else self.coeffs.shape[1] - 1

    @property
    def w_degree(self) -> int | None:
        return None if self.coeffs is None else self.coeffs.shape[0] - 1

    def __call__(self, w, z):
        w = np.asarray(w, dtype=complex)
        z = np.asarray(z, dtype=complex)
        return np.polynomial.polynomial.polyval2d(w, z, self.coeffs)

    def distance(self, other: "MinimalPolynomial") -> float:
        if self.coeffs is None or other.coeffs is None or self.coeffs.shape != other.coeffs.shape:
            return math.inf
        return float(np.max(np.abs(self.coeffs - other.coeffs)))

    def to_json(self) -> dict:
        doc = {"determined": self.determined, "sigma_ratio": self.sigma_ratio}
        if self.coeffs is not None:
            doc.update(
                z_degree=self.z_degree,
                w_degree=self.w_degree,
                coefficients=[[[float(c.real), float(c.imag)] for c in row] for row in self.coeffs],
            )
        return doc


def _normalize_relation(c: np.ndarray) -> np.ndarray:
    c = c / np.linalg.norm(c)
    mags = np.abs(c).ravel()
    # first near-maximal coefficient, so that ties do not make the phase depend on rounding
    big = c.flat[int(np.argmax(mags >= mags.max() * (1 - 1e-8)))]
    c = c * (abs(big) / big)
    c[np.abs(c) < 1e-14] = 0
    return c


def all_sheet_pairs(f: IsometryMap, coord: int, points=None) -> np.ndarray:
    """``(w, z)`` pairs with ``z`` the value of component ``coord`` on every sheet over ``w``."""
    if points is None:
        points = 0.7 * np.exp(2j * np.pi * (np.arange(5) + 0.21) / 5)
    pairs = []
    for w in points:
        for state in f.states_at(complex(w)):
            z = f.state_value(state)[coord]
            if np.isfinite(z) and abs(z) < 1e6:
                pairs.append((complex(w), complex(z)))
    return np.array(pairs, dtype=complex)


def minimal_polynomial_fit(func, max_dz: int = 8, max_dw: int = 8, center: complex = 0j,
                           radius: float = 0.5, tol: float = FIT_TOL,
                           check_radius: float = 0.99, sheets=None) -> MinimalPolynomial:
    """Lowest-bidegree relation ``P(w, func(w)) = 0``, z-degree first, from a numerical nullspace.

    Samples of one branch alone are ambiguous: a polynomial of too low
    z-degree can cancel ``P(w, f(w))`` to rounding level on a circle and
    still not vanish identically. When ``sheets = (map, coord)`` is given the
    monomial matrix also carries the values of that component on every sheet
    over the sampling circle, which a genuine relation must annihilate too.
    Candidates are re-checked at fresh points (radius ``check_radius`` on the
    given branch and all sheets over a second circle).
    """
    m = 4 * (max_dz + 1) * (max_dw + 1)
    angles = 2 * np.pi * (np.arange(m) + 0.5) / m
    w = center + radius * np.exp(1j * angles)
    z = np.asarray(func(w), dtype=complex)
    w_check = center + check_radius * np.exp(1j * (angles[::7] + 0.37))
    z_check = np.asarray(func(w_check), dtype=complex)
    if sheets is not None:
        f, coord = sheets
        base = center + radius * np.exp(2j * np.pi * (np.arange((max_dz + 1) * (max_dw + 1) + 4) + 0.13)
                                        / ((max_dz + 1) * (max_dw + 1) + 4))
        extra = all_sheet_pairs(f, coord, base)
        w, z = np.concatenate([w, extra[:, 0]]), np.concatenate([z, extra[:, 1]])
        again = all_sheet_pairs(f, coord, center + 0.7 * radius * np.exp(2j * np.pi * (np.arange(7) + 0.41) / 7))
        w_check, z_check = np.concatenate([w_check, again[:, 0]]), np.concatenate([z_check, again[:, 1]])
    rows = w.size
    best = math.inf
    for dz in range(1, max_dz + 1):
        for dw in range(0, max_dw + 1):
            W = w[:, None] ** np.arange(dw + 1)[None]
            Z = z[:, None] ** np.arange(dz + 1)[None]
            M = (W[:, :, None] * Z[:, None, :]).reshape(rows, -1)
            norms = np.linalg.norm(M, axis=0)
            if np.any(norms == 0):
                continue
            _, s, vh = np.linalg.svd(M / norms, full_matrices=False)
            ratio = float(s[-1] / s[0])
            best = min(best, ratio)
            if ratio > tol:
                continue
            coeffs = _normalize_relation((vh[-1].conj() / norms).reshape(dw + 1, dz + 1))
            if not np.any(coeffs[:, -1]):
                continue
            poly = MinimalPolynomial(coeffs, ratio)
            scale = np.sum(np.abs(coeffs)[None] * (np.abs(w_check)[:, None, None] ** np.arange(dw + 1)[None, :, None])
                           * (np.abs(z_check)[:, None, None] ** np.arange(dz + 1)[None, None, :]), axis=(1, 2))
            if np.max(np.abs(poly(w_check, z_check)) / scale) <= 1e-8:
                return poly
    return MinimalPolynomial(None, best)


def rational_fibre_degree(R, R_component, w0: complex = 0.3141 + 0.2718j, tol: float = 1e-8) -> int:
    """Distinct values of ``R_component`` over the fibre ``R^{-1}(w0)``.

    An independent count of the sheeting number of ``R_component(f1)``.
    """
    roots = np.polynomial.polynomial.polyroots(R.preimage_polynomial(w0))
    vals = [complex(R_component(r)) for r in roots]
    distinct: list[complex] = []
    for v in vals:
        if all(abs(v - d) > tol * max(1.0, abs(d)) for d in distinct):
            distinct.append(v)
    return len(distinct)


# sheeting ------------------------------------------------------------------------------

@dataclass
class SheetingReport:
    p: int
    k: float
    n: int | None
    s: list[int | None]
    identities: dict[str, bool]
    orbit_overflow: bool = False
    orbit_component_sizes: list[int] = field(default_factory=list)
    caveat: str = CAVEAT

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "k": self.k,
            "n": self.n,
            "s": self.s,
            "identities": self.identities,
            "orbit_overflow": self.orbit_overflow,
            "orbit_component_sizes": self.orbit_component_sizes,
            "caveat": self.caveat,
        }


def ng_identities(p: int, k: float, n: int | None, s: list[int | None]) -> dict[str, bool]:
    if n is None or any(v is None for v in s):
        return {"sum_reciprocal": False, "divisibility": False, "range": False}
    return {
        "sum_reciprocal": bool(abs(sum(1.0 / v for v in s) - k) <= 1e-9),
        "divisibility": all(n % v == 0 for v in s),
        "range": bool(p <= n * k + 1e-12 and n <= 2 ** (p - 1)),
    }


def sheeting_report(f: IsometryMap, k: float | None = None, base: complex = 0.1234 + 0.0567j,
                    max_dw: int = 8) -> SheetingReport:
    """Global and per-component sheeting numbers of a map into a polydisk."""
    if any(fac.kind != "disk" for fac in f.target.factors):
        raise Rejection("sheeting_report", "target must be a polydisk")
    p = f.dim
    k = float(f.source_constant if k is None else k)
    cap = 2 ** (p - 1) + 1
    orbit = monodromy_orbit(f, base, cap=cap)
    n = None if orbit.overflow else len(orbit.germs)
    max_dz = 2 ** (p - 1)
    s: list[int | None] = []
    for j in range(p):
        fit = minimal_polynomial_fit(lambda w, j=j: f(w)[..., j], max_dz=max_dz, max_dw=max_dw, sheets=(f, j))
        s.append(fit.z_degree)
    return SheetingReport(
        p=p,
        k=k,
        n=n,
        s=s,
        identities=ng_identities(p, k, n, s),
        orbit_overflow=orbit.overflow,
        orbit_component_sizes=component_orbit_sizes(orbit),
    )
