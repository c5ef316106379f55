"""Isometries of the disk into the disk times a ball, solved from unitary data.

The defining relation is ``U (f1, f2)^t = (w, f1 f2)^t`` for a unitary
``U`` of size ``n+1``. Eliminating ``f2`` gives a rational ``R`` with
``R(f1(w)) = w`` and rational ``R_j`` with ``f2_j = R_j(f1)``; ``R`` is a
Blaschke-type map and carries the congruence data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.linalg import schur

from .domains import ProductSpace
from .errors import Rejection
from .maps import IsometryMap, Mobius, _dedupe
from .series import TruncatedSeries, polyval_series, series_compose, series_divide, series_reversion

UNITARY_TOL = 1e-12
COEFF_TOL = 1e-10
SERIES_TOL = 1e-9
ROOT_MATCH_TOL = 1e-7


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _unpair(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


# unitary input ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise Rejection("UnitaryMatrix", f"need a square matrix of size >= 2, got shape {m.shape}")
        err = np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0])))
        if err > UNITARY_TOL:
            raise Rejection("UnitaryMatrix", f"not unitary: max|UU* - I| = {err:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def corner(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def row_tail(self) -> np.ndarray:
        return self.matrix[0, 1:]

    @property
    def col_tail(self) -> np.ndarray:
        return self.matrix[1:, 0]

    @property
    def block(self) -> np.ndarray:
        return self.matrix[1:, 1:]

    def to_json(self) -> list:
        return [[_pair(v) for v in row] for row in self.matrix]

    @classmethod
    def from_json(cls, rows) -> "UnitaryMatrix":
        return cls(np.array([[_unpair(v) for v in row] for row in rows], dtype=complex))


def u_zeta(zeta: complex) -> UnitaryMatrix:
    """The explicit 3x3 family whose solved maps have irrational, proper ball parts."""
    zeta = complex(zeta)
    if abs(zeta) >= 1 / 3:
        raise Rejection("u_zeta", f"|zeta| = {abs(zeta):.6g} outside the certified range |zeta| < 1/3")
    zc = zeta.conjugate()
    s = math.sqrt(1 - abs(zeta) ** 2)
    m = np.array(
        [
            [-zc * zc, -s, zc * s],
            [-s * zc, zeta, 1 - abs(zeta) ** 2],
            [s, 0, zeta],
        ],
        dtype=complex,
    )
    return UnitaryMatrix(m)


def normalize_unitary(U: UnitaryMatrix) -> UnitaryMatrix:
    """Conjugate by ``diag(1, Z)`` so the lower block becomes upper triangular.

    ``Z`` comes from the complex Schur form of the block; the solved map
    changes only by the unitary ``Z*`` on the ball factor.
    """
    A = U.block
    if np.allclose(np.tril(A, -1), 0, atol=1e-15):
        return U
    _, Z = schur(A, output="complex")
    D = np.eye(U.n + 1, dtype=complex)
    D[1:, 1:] = Z
    m = D.conj().T @ U.matrix @ D
    # restore exact unitarity lost to rounding
    q, r = np.linalg.qr(m)
    m = q * (np.diag(r) / np.abs(np.diag(r)))
    return UnitaryMatrix(m)


def f1_vanishes(U: UnitaryMatrix) -> bool:
    return bool(abs(np.linalg.det(U.block)) <= 1e-10)


# rational maps ------------------------------------------------------------------

def _trim(c: np.ndarray, rel: float = 1e-13) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    k = c.size
    while k > 1 and abs(c[k - 1]) <= rel * scale:
        k -= 1
    return c[:k].copy()


def _cluster(roots: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Replace numerically split repeated roots by their cluster means."""
    roots = list(np.asarray(roots, dtype=complex))
    out = np.array(roots, dtype=complex)
    used = [False] * len(roots)
    for i, r in enumerate(roots):
        if used[i]:
            continue
        group = [j for j in range(len(roots)) if not used[j] and abs(roots[j] - r) <= tol]
        mean = np.mean([roots[j] for j in group])
        for j in group:
            used[j] = True
            out[j] = mean
    return out


class RationalMap:
    """``num(z) / den(z)`` with ascending coefficients and a monic denominator."""

    def __init__(self, numerator, denominator=(1.0,)):
        num = _trim(numerator)
        den = _trim(denominator)
        if not np.any(den):
            raise Rejection("RationalMap", "zero denominator")
        lead = den[-1]
        self.num = num / lead
        self.den = den / lead
        self.num.setflags(write=False)
        self.den.setflags(write=False)

    @property
    def degree(self) -> int:
        n = 0 if not np.any(self.num) else self.num.size - 1
        return max(n, self.den.size - 1)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return P.polyval(z, self.num) / P.polyval(z, self.den)

    def __mul__(self, other: "RationalMap") -> "RationalMap":
        return RationalMap(P.polymul(self.num, other.num), P.polymul(self.den, other.den))

    def __truediv__(self, other: "RationalMap") -> "RationalMap":
        return RationalMap(P.polymul(self.num, other.den), P.polymul(self.den, other.num))

    def zeros(self) -> np.ndarray:
        return P.polyroots(self.num) if self.num.size > 1 else np.zeros(0, dtype=complex)

    def poles(self) -> np.ndarray:
        return P.polyroots(self.den) if self.den.size > 1 else np.zeros(0, dtype=complex)

    def reduced(self, tol: float = ROOT_MATCH_TOL) -> "RationalMap":
        """Cancel numerically common roots of numerator and denominator."""
        zs, ps = list(_cluster(self.zeros())), list(_cluster(self.poles()))
        cancelled = False
        for p in list(ps):
            if not zs:
                break
            gaps = [abs(z - p) for z in zs]
            i = int(np.argmin(gaps))
            if gaps[i] <= tol * max(1.0, abs(p)):
                zs.pop(i)
                ps.remove(p)
                cancelled = True
        if not cancelled:
            return self
        num = self.num[-1] * P.polyfromroots(zs) if zs else self.num[-1:]
        den = P.polyfromroots(ps) if ps else np.ones(1)
        return RationalMap(num, den)

    def critical_points(self) -> np.ndarray:
        """Finite critical points with finite critical value (multiple poles excluded)."""
        w = P.polysub(P.polymul(P.polyder(self.num), self.den), P.polymul(self.num, P.polyder(self.den)))
        w = _trim(w)
        if w.size <= 1:
            return np.zeros(0, dtype=complex)
        crit = _cluster(P.polyroots(w))
        poles = self.poles()
        if poles.size:
            crit = crit[np.min(np.abs(crit[:, None] - poles[None]), axis=1) > 1e-6]
        return crit

    def preimage_polynomial(self, w: complex) -> np.ndarray:
        """Coefficients of ``num(z) - w den(z)``."""
        return P.polysub(self.num, w * np.asarray(self.den))

    def series_at(self, z0: complex, order: int) -> TruncatedSeries:
        num = TruncatedSeries.from_polynomial(self.num, order, z0)
        den = TruncatedSeries.from_polynomial(self.den, order, z0)
        return series_divide(num, den)

    def compose_mobius(self, left: Mobius | None = None, right: Mobius | None = None) -> "RationalMap":
        """``left o self o right``."""
        num, den = np.asarray(self.num), np.asarray(self.den)
        if right is not None:
            d = max(num.size, den.size) - 1
            top = np.array([right.b, right.a])
            bot = np.array([right.d, right.c])
            new = []
            for poly in (num, den):
                acc = np.zeros(1, dtype=complex)
                for k, c in enumerate(poly):
                    term = c * P.polymul(P.polypow(top, k), P.polypow(bot, d - k))
                    acc = P.polyadd(acc, term)
                new.append(acc)
            num, den = new
        if left is not None:
            num, den = (
                P.polyadd(left.a * num, left.b * den),
                P.polyadd(left.c * num, left.d * den),
            )
        return RationalMap(num, den).reduced()

    def to_json(self) -> dict:
        return {"numerator": [_pair(c) for c in self.num], "denominator": [_pair(c) for c in self.den]}

    @classmethod
    def from_json(cls, doc) -> "RationalMap":
        return cls([_unpair(c) for c in doc["numerator"]], [_unpair(c) for c in doc["denominator"]])

    def __repr__(self):
        return f"RationalMap(num={np.round(self.num, 12)}, den={np.round(self.den, 12)})"


def _interpolate(values_at, degree: int, radius: float) -> np.ndarray:
    """Coefficients of a polynomial of known degree bound from samples on a circle."""
    m = degree + 1
    nodes = radius * np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.array([values_at(z) for z in nodes])
    coeffs = np.fft.fft(vals, axis=0) / m
    scale = radius ** -np.arange(m)
    return coeffs * (scale[:, None] if coeffs.ndim == 2 else scale)


def rational_R(U: UnitaryMatrix, validate: bool = True) -> tuple[RationalMap, list[RationalMap]]:
    """``R`` with ``R(f1) = w`` and ``R_j`` with ``f2_j = R_j(f1)``, from the entries of ``U``.

    ``R(z) = (-1)^n z det(U - z E) / det(zI - A)`` with ``E = diag(0, I)``;
    ``f2 = z (zI - A)^{-1} b``. Both numerators are recovered by sampling on
    a circle of radius 2, which lies outside the spectrum of ``A``.
    """
    if f1_vanishes(U):
        raise Rejection("rational_R", "f1 identically zero (lower block singular)")
    n, A, b = U.n, U.block, U.col_tail
    E = np.eye(n + 1)
    E[0, 0] = 0
    den = np.poly(A)[::-1]  # monic det(zI - A), ascending
    num = _interpolate(lambda z: (-1) ** n * z * np.linalg.det(U.matrix - z * E), n + 1, 2.0)
    R = RationalMap(num, den).reduced()
    I = np.eye(n)
    num_j = _interpolate(
        lambda z: z * np.linalg.solve(z * I - A, b) * np.linalg.det(z * I - A), n, 2.0
    )
    Rj = [RationalMap(num_j[:, j], den).reduced() for j in range(n)]
    if R.degree > n + 1:
        raise Rejection("rational_R", f"degree {R.degree} exceeds n + 1 = {n + 1}")
    if validate:
        err = inverse_identity_residual(R, solve_isometry(U, 24, with_rational=False).f1)
        if err > SERIES_TOL:
            raise Rejection("rational_R", f"R(f1(w)) != w in series, residual {err:.3e}")
    return R, Rj


def inverse_identity_residual(R: RationalMap, f1: TruncatedSeries) -> float:
    """Largest coefficient of ``num(f1) - w den(f1)``, the division-free form of ``R(f1(w)) = w``.

    Expanding ``R`` itself at 0 is ill-conditioned when a pole lies near 0.
    """
    num = polyval_series(R.num, f1)
    den = polyval_series(R.den, f1)
    return float(np.max(np.abs((num - TruncatedSeries.identity(f1.order, f1.center) * den).coeffs)))


def component_identity_residual(Rj: RationalMap, f1: TruncatedSeries, f2j: TruncatedSeries) -> float:
    """Largest coefficient of ``num_j(f1) - f2_j den_j(f1)``, the division-free form of ``f2_j = R_j(f1)``."""
    num = polyval_series(Rj.num, f1)
    den = polyval_series(Rj.den, f1)
    return float(np.max(np.abs((num - f2j * den).coeffs)))


# Blaschke form -----------------------------------------------------------------

@dataclass(frozen=True)
class BlaschkeForm:
    """``R(z) = alpha0 z prod (z - 1/conj(a_j)) / (z - a_j)``; ``beta0`` is the unimodular constant."""

    alpha0: complex
    roots: tuple[complex, ...]
    beta0: complex

    def to_rational(self) -> RationalMap:
        num = np.array([0, self.alpha0], dtype=complex)
        den = np.ones(1, dtype=complex)
        for a in self.roots:
            num = P.polymul(num, [-1 / np.conj(a), 1])
            den = P.polymul(den, [-a, 1])
        return RationalMap(num, den)

    def moduli(self) -> list[float]:
        return sorted(float(abs(a)) for a in self.roots)

    def to_json(self) -> dict:
        return {
            "alpha0": _pair(self.alpha0),
            "beta0": _pair(self.beta0),
            "roots": [_pair(a) for a in self.roots],
        }


def _sample_points(count: int, seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return (rng.uniform(0.05, 3.0, count)) * np.exp(2j * np.pi * rng.uniform(size=count))


def blaschke_symmetry_residual(R: RationalMap, points: np.ndarray | None = None) -> float:
    """max ``|R(1/conj z) conj(R(z)) - 1|`` away from poles."""
    z = _sample_points(100) if points is None else np.asarray(points, dtype=complex)
    poles = R.poles()
    if poles.size:
        gap = np.min(np.abs(z[:, None] - np.concatenate([poles, 1 / np.conj(poles[poles != 0])])[None]), axis=1)
        z = z[gap > 1e-3]
    z = z[np.abs(z) > 1e-3]
    vals = R(1 / np.conj(z)) * np.conj(R(z))
    return float(np.max(np.abs(vals - 1)))


def _order_roots(roots) -> list[complex]:
    """Largest modulus first, ties by smallest argument in ``[0, 2 pi)``."""
    return sorted(
        (complex(r) for r in roots),
        key=lambda r: (-round(abs(r), 9), round(math.atan2(r.imag, r.real) % (2 * math.pi), 9)),
    )


def blaschke_factorize(R: RationalMap, tol: float = 1e-9) -> BlaschkeForm:
    sym = blaschke_symmetry_residual(R)
    if not sym <= tol:
        raise Rejection("blaschke_factorize", f"not an isometry-induced rational map (symmetry residual {sym:.3e})")
    roots = _cluster(R.poles())
    if np.any(np.abs(roots) < 1e-12) or np.any(np.abs(roots) > 1 + 1e-9):
        raise Rejection("blaschke_factorize", "poles must lie in the closed disk minus the origin")
    alpha0 = complex(R.num[-1]) if R.num.size == R.den.size + 1 else complex("nan")
    if not np.isfinite(alpha0):
        raise Rejection("blaschke_factorize", "numerator degree must exceed denominator degree by one")
    beta0 = alpha0 / complex(np.prod(np.conj(roots))) if roots.size else alpha0
    form = BlaschkeForm(alpha0, tuple(_order_roots(roots)), complex(beta0))
    z = _sample_points(100, seed=11)
    recon = form.to_rational()
    z = z[np.min(np.abs(z[:, None] - roots[None]), axis=1) > 1e-3] if roots.size else z
    err = np.max(np.abs(recon(z) - R(z)) / np.maximum(1.0, np.abs(R(z))))
    if err > 1e-8:
        raise Rejection("blaschke_factorize", f"reconstruction residual {err:.3e}")
    return form


def _factor(zeta: complex) -> RationalMap:
    zeta = complex(zeta)
    return RationalMap([-1, np.conj(zeta)], [-zeta, 1])


def peel_factor(R: RationalMap) -> tuple[RationalMap, complex]:
    """Split off ``(conj(zeta) z - 1)/(z - zeta)`` for the largest-modulus pole ``zeta``."""
    form = blaschke_factorize(R)
    if not form.roots:
        raise Rejection("peel_factor", "already linear (totally geodesic direction)")
    zeta = form.roots[0]
    return (R / _factor(zeta)).reduced(), zeta


def extend_factor(R: RationalMap, zeta: complex) -> RationalMap:
    zeta = complex(zeta)
    if not 0 < abs(zeta) <= 1:
        raise Rejection("extend_factor", "zeta must lie in the closed disk minus the origin")
    return R * _factor(zeta)


# solving ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SolvedIsometry:
    U: UnitaryMatrix
    f1: TruncatedSeries
    f2: tuple[TruncatedSeries, ...]
    coefficient_residual: float
    R: RationalMap | None = None
    R_components: tuple[RationalMap, ...] = ()

    @property
    def order(self) -> int:
        return self.f1.order

    @property
    def degenerate(self) -> bool:
        return self.R is None

    def map(self) -> "UnitarySolvedMap":
        return UnitarySolvedMap(self.U)

    def to_json(self) -> dict:
        doc = {
            "unitary": self.U.to_json(),
            "order": self.order,
            "f1": self.f1.to_json(),
            "f2": [s.to_json() for s in self.f2],
            "coefficient_residual": self.coefficient_residual,
            "f1_vanishes": self.degenerate,
        }
        if self.R is not None:
            doc["R"] = self.R.to_json()
            doc["R_components"] = [r.to_json() for r in self.R_components]
            doc["deg_R"] = self.R.degree
        return doc


def _polarized_residual(f1: np.ndarray, f2: np.ndarray) -> float:
    """Coefficient form of ``(1 - f1(z) conj f1(w))(1 - f2(z).conj f2(w)) = 1 - z conj(w)``."""
    N = f1.size - 1
    prod = np.array([np.convolve(f1, row)[: N + 1] for row in f2])
    C = -np.outer(f1, f1.conj()) - f2.T @ f2.conj() + prod.T @ prod.conj()
    C[0, 0] += 1
    target = np.zeros_like(C)
    target[0, 0] = 1
    target[1, 1] = -1
    return float(np.max(np.abs(C - target)))


def solve_isometry(U: UnitaryMatrix, N: int = 64, with_rational: bool = True) -> SolvedIsometry:
    """Degree-by-degree solution with ``f(0) = 0``.

    At order ``d`` the unknown coefficient vector enters linearly through
    ``U`` while the quadratic terms only involve orders below ``d``, so each
    step is ``F_d = U^* rhs_d``.
    """
    if N < 2:
        raise Rejection("solve_isometry", "truncation order must be at least 2")
    n = U.n
    Ustar = U.matrix.conj().T
    F = np.zeros((n + 1, N + 1), dtype=complex)
    for d in range(1, N + 1):
        rhs = np.zeros(n + 1, dtype=complex)
        if d == 1:
            rhs[0] = 1.0
        else:
            # coefficient d of f1 * f2_j
            rhs[1:] = F[1:, d - 1 : 0 : -1] @ F[0, 1:d]
        F[:, d] = Ustar @ rhs
    residual = _polarized_residual(F[0], F[1:])
    if residual > COEFF_TOL:
        raise Rejection("solve_isometry", f"polarized coefficient residual {residual:.3e} exceeds {COEFF_TOL}")
    f1 = TruncatedSeries(0j, F[0])
    f2 = tuple(TruncatedSeries(0j, row) for row in F[1:])
    R, Rj = None, ()
    if with_rational and not f1_vanishes(U):
        R, Rj = rational_R(U, validate=False)
        Rj = tuple(Rj)
    return SolvedIsometry(U, f1, f2, residual, R, Rj)


# evaluable map ----------------------------------------------------------------------

def _batched_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of many polynomials (rows, ascending coefficients) via companion eigenvalues."""
    coeffs = np.atleast_2d(coeffs)
    deg = coeffs.shape[1] - 1
    if deg == 1:
        return (-coeffs[:, 0] / coeffs[:, 1])[:, None]
    comp = np.zeros((coeffs.shape[0], deg, deg), dtype=complex)
    comp[:, 1:, :-1] = np.eye(deg - 1)
    comp[:, :, -1] = -coeffs[:, :-1] / coeffs[:, -1:]
    return np.linalg.eigvals(comp)


class UnitarySolvedMap(IsometryMap):
    """The isometry determined by ``U``, evaluated algebraically anywhere in the disk.

    ``f1(w)`` is the root of ``num_R(z) - w den_R(z)`` of smallest modulus
    (the one inside the disk) and ``f2 = (R_j(f1))``. When ``f1`` vanishes
    identically the map is ``w -> (0, w conj(a))`` with ``a`` the first-row tail.
    """

    def __init__(self, U: UnitaryMatrix, zeta: complex | None = None):
        self.U = U
        self.zeta = zeta
        self.target = ProductSpace.disk_times_ball(U.n)
        self.source_constant = 1.0
        self.degenerate = f1_vanishes(U)
        if self.degenerate:
            self.R, self.R_components = None, ()
        else:
            R, Rj = rational_R(U)
            self.R, self.R_components = R, tuple(Rj)

    def f1_values(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        flat = w.reshape(-1)
        if self.degenerate:
            return np.zeros_like(w)
        num = np.zeros(self.R.degree + 1, dtype=complex)
        num[: self.R.num.size] = self.R.num
        den = np.zeros_like(num)
        den[: self.R.den.size] = self.R.den
        roots = _batched_roots(num[None, :] - flat[:, None] * den[None, :])
        pick = roots[np.arange(flat.size), np.argmin(np.abs(roots), axis=1)]
        return pick.reshape(w.shape)

    def _eval(self, w):
        if self.degenerate:
            return np.concatenate([np.zeros(w.shape + (1,), dtype=complex), w[..., None] * np.conj(self.U.row_tail)], axis=-1)
        z = self.f1_values(w)
        return np.stack([z] + [r(z) for r in self.R_components], axis=-1)

    def states_at(self, x):
        if self.degenerate:
            return [None]
        roots = P.polyroots(self.R.preimage_polynomial(complex(x)))
        return [complex(r) for r in roots]

    def state_value(self, state):
        if self.degenerate:
            raise Rejection("UnitarySolvedMap.state_value", "degenerate map has no sheets")
        return np.array([state] + [complex(r(state)) for r in self.R_components], dtype=complex)

    def apply_series(self, state, x):
        if self.degenerate:
            return [0 * x] + [x * complex(c) for c in np.conj(self.U.row_tail)]
        z0 = complex(state)
        rser = self.R.series_at(z0, x.order)
        rev = series_reversion(rser)
        f1 = series_compose(TruncatedSeries(x.coeffs[0], rev.coeffs), x)
        return [f1] + [series_compose(r.series_at(z0, x.order), f1) for r in self.R_components]

    def branch_points(self):
        if self.degenerate:
            return np.zeros(0, dtype=complex)
        crit = self.R.critical_points()
        return _dedupe([self.R(c) for c in crit])

    def preimages(self, coord, value):
        if coord != 0 or self.degenerate:
            raise Rejection("preimages", "only the disk component of a solved map is supported")
        return [complex(self.R(value))]

    def to_json(self):
        if self.zeta is not None:
            return {"kind": "unitary", "zeta": _pair(complex(self.zeta))}
        return {"kind": "unitary", "matrix": self.U.to_json()}


def unitary_map_from_json(doc: dict) -> UnitarySolvedMap:
    if "zeta" in doc:
        zeta = _unpair(doc["zeta"])
        return UnitarySolvedMap(u_zeta(zeta), zeta=zeta)
    if "matrix" in doc:
        return UnitarySolvedMap(UnitaryMatrix.from_json(doc["matrix"]))
    raise ValueError("unitary map needs 'zeta' or 'matrix'")


def random_unitary(n_plus_1: int, rng: np.random.Generator) -> UnitaryMatrix:
    """Haar-distributed unitary via QR with phase correction."""
    z = rng.normal(size=(n_plus_1, n_plus_1)) + 1j * rng.normal(size=(n_plus_1, n_plus_1))
    q, r = np.linalg.qr(z)
    return UnitaryMatrix(q * (np.diag(r) / np.abs(np.diag(r))))
