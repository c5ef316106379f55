"""Canonical isometries from the disk into polydisks and their compositions.

Every map is multivalued once continued outside the disk, so besides the
vectorised principal-branch ``__call__`` each map exposes *sheet states*:
``states_at(x)`` lists the finitely many local branches over a point ``x``,
``state_value`` reads off the component values of a state and
``apply_series`` turns a state into power series once the source variable
is given as a series centred at ``x``. The monodromy module is written
against this interface only.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .domains import ProductSpace
from .errors import Rejection
from .series import TruncatedSeries, mobius_series, series_fractional_power

BOUNDARY_TOL = 1e-14


# Cayley transform -------------------------------------------------------------

def cayley(direction: str, z):
    """``tau = i(1+z)/(1-z)`` (``"to_halfplane"``) or ``z = (tau-i)/(tau+i)`` (``"to_disk"``)."""
    z = np.asarray(z, dtype=complex)
    if direction == "to_halfplane":
        if np.any(np.abs(z) >= 1):
            raise Rejection("cayley", "point not inside the unit disk")
        out = 1j * (1 + z) / (1 - z)
    elif direction == "to_disk":
        if np.any(z.imag <= 0):
            raise Rejection("cayley", "point not in the open upper half-plane")
        out = (z - 1j) / (z + 1j)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class Mobius:
    """``z -> (a z + b) / (c z + d)``."""

    a: complex
    b: complex
    c: complex
    d: complex

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @classmethod
    def from_matrix(cls, m) -> "Mobius":
        return cls(*(complex(v) for v in np.asarray(m).ravel()))

    def __matmul__(self, other: "Mobius") -> "Mobius":
        return Mobius.from_matrix(self.matrix() @ other.matrix())

    def inverse(self) -> "Mobius":
        return Mobius(self.d, -self.b, -self.c, self.a)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.a * z + self.b) / (self.c * z + self.d)

    def series(self, s: TruncatedSeries) -> TruncatedSeries:
        return mobius_series(self.a, self.b, self.c, self.d, s)


CAYLEY = Mobius(1j, 1j, -1, 1)  # disk -> upper half-plane
CAYLEY_INV = Mobius(1, -1j, 1, 1j)


def _disk_automorphism_mobius(c: complex, theta: float = 0.0) -> Mobius:
    e = cmath.exp(1j * theta)
    return Mobius(e, -e * c, -np.conj(c), 1)


def _pth_root_principal(tau, p: int):
    """Principal ``tau**(1/p)``; on the upper half-plane this is the branch with argument in ``(0, pi/p)``."""
    return np.exp(np.log(tau) / p)


def eval_pth_root(p: int, w):
    """The raw ``p``-th root embedding: Cayley, ``(gamma^j tau^(1/p))_j``, inverse Cayley per coordinate.

    Not normalised, so ``F(0) != 0``. Output has trailing axis of length ``p``.
    """
    if p < 2:
        raise Rejection("eval_pth_root", "p must be at least 2")
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(w) >= 1):
        raise Rejection("eval_pth_root", "point not inside the unit disk")
    root = _pth_root_principal(CAYLEY(w), p)
    gamma = np.exp(1j * np.pi * np.arange(p) / p)
    return CAYLEY_INV(root[..., None] * gamma)


def eval_diagonal(p: int, w):
    w = np.asarray(w, dtype=complex)
    return np.repeat(w[..., None], p, axis=-1)


def chordal(a, b):
    """Chordal distance on the Riemann sphere; finite for large values."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return np.abs(a - b) / np.sqrt((1 + np.abs(a) ** 2) * (1 + np.abs(b) ** 2))


# base class -------------------------------------------------------------------

class IsometryMap:
    """A holomorphic map from the disk into ``target`` with source constant ``k``.

    The isometry equation reads ``prod (1 - |F_i|^2)^{mu_i} = (1 - |w|^2)^k``.
    """

    target: ProductSpace
    source_constant: float

    @property
    def dim(self) -> int:
        return self.target.total_dim

    def __call__(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        if np.any(np.abs(w) >= 1):
            raise Rejection("evaluate", "point not inside the unit disk")
        return self._eval(w)

    def _eval(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # sheets
    def states_at(self, x: complex) -> list:
        raise NotImplementedError

    def state_value(self, state) -> np.ndarray:
        raise NotImplementedError

    def apply_series(self, state, x: TruncatedSeries) -> list[TruncatedSeries]:
        raise NotImplementedError

    def principal_state(self, w: complex):
        """The state over ``w`` (inside the disk) that agrees with ``__call__``."""
        return self.nearest_state(w, self(complex(w)))

    def nearest_state(self, x: complex, anchor):
        """The state over ``x`` whose values are chordally closest to ``anchor``."""
        states = self.states_at(complex(x))
        anchor = np.asarray(anchor, dtype=complex)
        gaps = [np.max(chordal(self.state_value(s), anchor)) for s in states]
        return states[int(np.argmin(gaps))]

    def germ(self, center: complex, order: int, anchor=None) -> list[TruncatedSeries]:
        """Component germs at ``center`` on the sheet whose value is nearest ``anchor``."""
        center = complex(center)
        state = self.principal_state(center) if anchor is None else self.nearest_state(center, anchor)
        return self.apply_series(state, TruncatedSeries.identity(order, center))

    def branch_points(self) -> np.ndarray:
        """Finite branch points of the full tuple (over all sheets)."""
        return np.zeros(0, dtype=complex)

    def preimages(self, coord: int, value: complex) -> list[complex]:
        """All ``w`` (any sheet) with component ``coord`` equal to ``value``."""
        raise Rejection("preimages", f"not available for {type(self).__name__}")

    def to_json(self) -> dict:
        raise NotImplementedError


def _polydisk(p: int) -> ProductSpace:
    return ProductSpace.polydisk(p)


# identity, constants and diagonals -------------------------------------------

class Diagonal(IsometryMap):
    """``w -> (w, ..., w)`` into the ``p``-disk with ``k = p``; ``p = 1`` is the identity."""

    def __init__(self, p: int):
        if p < 1:
            raise Rejection("Diagonal", "p must be positive")
        self.p = int(p)
        self.target = _polydisk(self.p)
        self.source_constant = float(self.p)

    def _eval(self, w):
        return eval_diagonal(self.p, w)

    def states_at(self, x):
        return [complex(x)]

    def state_value(self, state):
        return np.full(self.p, state, dtype=complex)

    def apply_series(self, state, x):
        return [x] * self.p

    def preimages(self, coord, value):
        return [complex(value)]

    def to_json(self):
        return {"kind": "diagonal", "p": self.p}


class ConstantMap(IsometryMap):
    """A constant point; contributes nothing to the metric, ``k = 0``."""

    def __init__(self, value, target: ProductSpace | None = None):
        self.value = np.atleast_1d(np.asarray(value, dtype=complex))
        self.target = target or _polydisk(self.value.size)
        if self.target.total_dim != self.value.size:
            raise ValueError("constant does not match target dimension")
        if np.any(self.target.brackets(self.value) <= 0):
            raise Rejection("ConstantMap", "value outside the target")
        self.source_constant = 0.0

    def _eval(self, w):
        return np.broadcast_to(self.value, w.shape + (self.value.size,)).copy()

    def states_at(self, x):
        return [None]

    def state_value(self, state):
        return self.value.copy()

    def apply_series(self, state, x):
        return [TruncatedSeries.constant(v, x.order, x.center) for v in self.value]

    def to_json(self):
        return {"kind": "constant", "value": [[v.real, v.imag] for v in self.value]}


# p-th root embedding ------------------------------------------------------------

class PthRoot(IsometryMap):
    """The ``p``-th root embedding normalised so that ``F(0) = 0`` and ``F_j'(0) > 0``.

    Component ``j`` is ``N_j(r)`` for the Mobius map
    ``N_j = A_j o CayleyInv o (gamma^j .)`` applied to a ``p``-th root ``r``
    of ``tau = Cayley(w)``; the ``p`` choices of ``r`` are the sheets.
    """

    def __init__(self, p: int):
        if p < 2:
            raise Rejection("PthRoot", "p must be at least 2")
        self.p = int(p)
        self.target = _polydisk(self.p)
        self.source_constant = 1.0
        gamma = cmath.exp(1j * cmath.pi / self.p)
        r0 = cmath.exp(1j * cmath.pi / (2 * self.p))  # i**(1/p)
        mobs = []
        for j in range(self.p):
            raw = CAYLEY_INV @ Mobius(gamma**j, 0, 0, 1)
            c = complex(raw(r0))
            centred = _disk_automorphism_mobius(c) @ raw
            # derivative at w = 0 via the chain rule; tau'(0) = 2i, r'(tau) = r / (p tau)
            dr = r0 / (self.p * 1j) * 2j
            m = centred.matrix()
            dn = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) / (m[1, 0] * r0 + m[1, 1]) ** 2
            theta = -cmath.phase(dn * dr)
            mobs.append(_disk_automorphism_mobius(0, theta) @ centred)
        self.mobius = tuple(mobs)
        self.centers = tuple(complex(CAYLEY_INV(gamma**j * r0)) for j in range(self.p))

    def _eval(self, w):
        r = _pth_root_principal(CAYLEY(w), self.p)
        return np.stack([m(r) for m in self.mobius], axis=-1)

    def states_at(self, x):
        x = complex(x)
        if abs(x - 1) < BOUNDARY_TOL or abs(x + 1) < BOUNDARY_TOL:
            raise Rejection("PthRoot.states_at", "point is a branch point")
        r = complex(_pth_root_principal(complex(CAYLEY(x)), self.p))
        return [r * cmath.exp(2j * cmath.pi * m / self.p) for m in range(self.p)]

    def state_value(self, state):
        return np.array([m(state) for m in self.mobius], dtype=complex)

    def apply_series(self, state, x):
        tau = CAYLEY.series(x)
        root = series_fractional_power(tau, 1.0 / self.p)
        root = root * (state / root.coeffs[0])
        return [m.series(root) for m in self.mobius]

    def branch_points(self):
        return np.array([1.0 + 0j, -1.0 + 0j])

    def preimages(self, coord, value):
        s = self.mobius[coord].inverse()(complex(value))
        if not np.isfinite(s):
            return [-1.0 + 0j]
        tau = s**self.p
        if abs(tau) > 1e300 or not np.isfinite(tau):
            return [1.0 + 0j]
        return [complex(CAYLEY.inverse()(tau))]

    def to_json(self):
        return {"kind": "pth_root", "p": self.p}


# compositions --------------------------------------------------------------------

class SharpComposite(IsometryMap):
    """``G^# o F``: the factor ``slot`` (1-based) of ``F`` is replaced by ``G`` applied to it."""

    def __init__(self, outer: IsometryMap, inner: IsometryMap, slot: int):
        factors = outer.target.factors
        if not 1 <= slot <= len(factors):
            raise Rejection("sharp_compose", f"slot {slot} out of range 1..{len(factors)}")
        if factors[slot - 1].kind != "disk":
            raise Rejection("sharp_compose", f"slot {slot} is not a disk factor")
        if inner.source_constant <= 0:
            raise Rejection("sharp_compose", "inner map has no metric contribution")
        self.outer, self.inner, self.slot = outer, inner, int(slot)
        self.coord = outer.target.slices()[slot - 1].start
        mu = outer.target.constants[slot - 1]
        scale = mu / inner.source_constant
        new_factors = factors[: slot - 1] + inner.target.factors + factors[slot:]
        new_constants = (
            outer.target.constants[: slot - 1]
            + tuple(scale * c for c in inner.target.constants)
            + outer.target.constants[slot:]
        )
        self.target = ProductSpace(new_factors, new_constants)
        self.source_constant = outer.source_constant

    def _splice(self, left: np.ndarray, mid: np.ndarray) -> np.ndarray:
        return np.concatenate([left[..., : self.coord], mid, left[..., self.coord + 1 :]], axis=-1)

    def _eval(self, w):
        f = self.outer._eval(w)
        return self._splice(f, self.inner._eval(f[..., self.coord]))

    def states_at(self, x):
        out = []
        for sf in self.outer.states_at(x):
            v = self.outer.state_value(sf)[self.coord]
            out.extend((sf, sg) for sg in self.inner.states_at(v))
        return out

    def state_value(self, state):
        sf, sg = state
        return self._splice(self.outer.state_value(sf), self.inner.state_value(sg))

    def apply_series(self, state, x):
        sf, sg = state
        f = self.outer.apply_series(sf, x)
        g = self.inner.apply_series(sg, f[self.coord])
        return f[: self.coord] + g + f[self.coord + 1 :]

    def branch_points(self):
        pts = list(self.outer.branch_points())
        for b in self.inner.branch_points():
            pts.extend(self.outer.preimages(self.coord, b))
        return _dedupe(pts)

    def preimages(self, coord, value):
        n_inner = self.inner.dim
        if coord < self.coord:
            return self.outer.preimages(coord, value)
        if coord >= self.coord + n_inner:
            return self.outer.preimages(coord - n_inner + 1, value)
        out = []
        for v in self.inner.preimages(coord - self.coord, value):
            out.extend(self.outer.preimages(self.coord, v))
        return out

    def to_json(self):
        return {"kind": "sharp", "outer": self.outer.to_json(), "inner": self.inner.to_json(), "slot": self.slot}


def sharp_compose(outer: IsometryMap, inner: IsometryMap, slot: int) -> IsometryMap:
    return SharpComposite(outer, inner, slot)


class Juxtaposed(IsometryMap):
    """``w -> (F_1(w), ..., F_r(w))``; constants concatenate and ``k`` adds."""

    def __init__(self, parts):
        self.parts = tuple(parts)
        if not self.parts:
            raise ValueError("need at least one part")
        factors, constants = (), ()
        for part in self.parts:
            factors += part.target.factors
            constants += part.target.constants
        self.target = ProductSpace(factors, constants)
        self.source_constant = float(sum(part.source_constant for part in self.parts))
        self.offsets = np.cumsum([0] + [part.dim for part in self.parts])

    def _eval(self, w):
        return np.concatenate([part._eval(w) for part in self.parts], axis=-1)

    def states_at(self, x):
        combos = [()]
        for part in self.parts:
            combos = [c + (s,) for c in combos for s in part.states_at(x)]
        return combos

    def state_value(self, state):
        return np.concatenate([part.state_value(s) for part, s in zip(self.parts, state)])

    def apply_series(self, state, x):
        out = []
        for part, s in zip(self.parts, state):
            out.extend(part.apply_series(s, x))
        return out

    def branch_points(self):
        return _dedupe([b for part in self.parts for b in part.branch_points()])

    def preimages(self, coord, value):
        i = int(np.searchsorted(self.offsets, coord, side="right")) - 1
        return self.parts[i].preimages(coord - self.offsets[i], value)

    def to_json(self):
        return {"kind": "juxtapose", "parts": [part.to_json() for part in self.parts]}


class WithConstants(IsometryMap):
    """Delegate to ``base`` but attach different target constants and source constant."""

    def __init__(self, base: IsometryMap, constants, source_constant: float):
        self.base = base
        self.target = base.target.with_constants(constants)
        self.source_constant = float(source_constant)

    def _eval(self, w):
        return self.base._eval(w)

    def states_at(self, x):
        return self.base.states_at(x)

    def state_value(self, state):
        return self.base.state_value(state)

    def apply_series(self, state, x):
        return self.base.apply_series(state, x)

    def branch_points(self):
        return self.base.branch_points()

    def preimages(self, coord, value):
        return self.base.preimages(coord, value)

    def to_json(self):
        return self.base.to_json()


def _dedupe(points, tol: float = 1e-9) -> np.ndarray:
    out: list[complex] = []
    for p in points:
        p = complex(p)
        if np.isfinite(p) and all(abs(p - q) > tol for q in out):
            out.append(p)
    return np.array(sorted(out, key=lambda z: (round(z.real, 9), round(z.imag, 9))), dtype=complex)


# catalog -------------------------------------------------------------------------

def _sqrt_chain(p: int) -> IsometryMap:
    f: IsometryMap = PthRoot(2)
    for q in range(3, p + 1):
        f = SharpComposite(f, PthRoot(2), q - 1)
    return f


_FORMS = {
    # bidisk with conformal constants; params give the free constant
    "bidisk-1": (1, "(z, 0) with lambda_1 = 1; param lambda_2 > 0"),
    "bidisk-2": (1, "(0, z) with lambda_2 = 1; param lambda_1 > 0"),
    "bidisk-3": (1, "(z, z) with lambda_1 + lambda_2 = 1; param lambda_1 in (0, 1)"),
    "bidisk-4": (0, "square root embedding with unit constants"),
    # disk into 2-, 3- and 4-disks with unit constants, grouped by k
    "disk2-k1": (0, "square root embedding"),
    "disk3-k1-a": (0, "cube root embedding"),
    "disk3-k1-b": (0, "square root composed into the second slot of a square root"),
    "disk3-k2": (0, "(z, square root embedding)"),
    "disk4-k1-a": (0, "4-th root embedding"),
    "disk4-k1-b": (0, "square roots chained through the last slot twice"),
    "disk4-k1-c": (0, "cube root composed into slot 2 of a square root"),
    "disk4-k1-d": (0, "square root composed into slot 2 of a cube root"),
    "disk4-k1-e": (0, "square roots composed into both slots of a square root"),
    "disk4-k2-a": (0, "two square root embeddings side by side"),
    "disk4-k2-b": (0, "(z, disk3-k1-b)"),
    "disk4-k2-c": (0, "(z, cube root embedding)"),
    "disk4-k3": (0, "(z, z, square root embedding)"),
    "disk4-k4": (0, "diagonal embedding into the 4-disk"),
    # parametric families
    "pth-root": (1, "param p >= 2"),
    "diagonal": (1, "param p >= 1"),
    "sqrt-chain": (1, "square roots chained through the last slot; param p >= 2"),
    "equal-branching": (3, "(diagonal_l, F_n, ..., F_n); params l >= 0, n >= 2, copies >= 1"),
}


def catalog_forms() -> dict[str, str]:
    return {name: doc for name, (_, doc) in _FORMS.items()}


class CatalogForm(WithConstants):
    def __init__(self, form: str, params, base: IsometryMap, constants, source_constant):
        super().__init__(base, constants, source_constant)
        self.form = form
        self.params = tuple(params)

    def to_json(self):
        return {"kind": "catalog", "form": self.form, "params": list(self.params)}


def _int_param(form, value, low):
    if float(value) != int(value) or int(value) < low:
        raise Rejection("catalog_construct", f"{form}: parameter must be an integer >= {low}, got {value}")
    return int(value)


def catalog_construct(form: str, params=()) -> CatalogForm:
    """Build a normal form with its constants attached."""
    if form not in _FORMS:
        raise Rejection("catalog_construct", f"unknown form {form!r}")
    params = tuple(params)
    want = _FORMS[form][0]
    if len(params) != want:
        raise Rejection("catalog_construct", f"{form} takes {want} parameter(s), got {len(params)}")
    ident = Diagonal(1)
    F2, F3 = PthRoot(2), PthRoot(3)
    sq = lambda: SharpComposite(PthRoot(2), PthRoot(2), 2)  # noqa: E731

    if form.startswith("bidisk"):
        if form == "bidisk-4":
            return CatalogForm(form, params, F2, (1.0, 1.0), 1.0)
        lam = float(params[0])
        if form == "bidisk-1":
            if not lam > 0:
                raise Rejection("catalog_construct", "lambda_2 must be positive")
            base = Juxtaposed([ident, ConstantMap([0.0])])
            return CatalogForm(form, params, base, (1.0, lam), 1.0)
        if form == "bidisk-2":
            if not lam > 0:
                raise Rejection("catalog_construct", "lambda_1 must be positive")
            base = Juxtaposed([ConstantMap([0.0]), ident])
            return CatalogForm(form, params, base, (lam, 1.0), 1.0)
        if not 0 < lam < 1:
            raise Rejection("catalog_construct", "lambda_1 must lie in (0, 1)")
        return CatalogForm(form, params, Diagonal(2), (lam, 1.0 - lam), 1.0)

    if form == "pth-root":
        base = PthRoot(_int_param(form, params[0], 2))
    elif form == "diagonal":
        base = Diagonal(_int_param(form, params[0], 1))
    elif form == "sqrt-chain":
        base = _sqrt_chain(_int_param(form, params[0], 2))
    elif form == "equal-branching":
        l_ = _int_param(form, params[0], 0)
        n = _int_param(form, params[1], 2)
        copies = _int_param(form, params[2], 1)
        parts = ([Diagonal(l_)] if l_ else []) + [PthRoot(n) for _ in range(copies)]
        base = Juxtaposed(parts)
    else:
        base = {
            "disk2-k1": lambda: F2,
            "disk3-k1-a": lambda: F3,
            "disk3-k1-b": sq,
            "disk3-k2": lambda: Juxtaposed([ident, F2]),
            "disk4-k1-a": lambda: PthRoot(4),
            "disk4-k1-b": lambda: SharpComposite(sq(), PthRoot(2), 3),
            "disk4-k1-c": lambda: SharpComposite(F2, F3, 2),
            "disk4-k1-d": lambda: SharpComposite(F3, F2, 2),
            "disk4-k1-e": lambda: SharpComposite(SharpComposite(F2, PthRoot(2), 1), PthRoot(2), 3),
            "disk4-k2-a": lambda: Juxtaposed([F2, PthRoot(2)]),
            "disk4-k2-b": lambda: Juxtaposed([ident, sq()]),
            "disk4-k2-c": lambda: Juxtaposed([ident, F3]),
            "disk4-k3": lambda: Juxtaposed([Diagonal(2), F2]),
            "disk4-k4": lambda: Diagonal(4),
        }[form]()
    return CatalogForm(form, params, base, base.target.constants, base.source_constant)


# polydisk -> polydisk ---------------------------------------------------------------

class FactorizedPolydiskMap:
    """``(z_1, ..., z_q) -> (G_1(z_1), ..., G_q(z_q))`` with disk isometries ``G_j``.

    Constructor only: no decision procedure for whether a given map factors.
    """

    def __init__(self, blocks):
        self.blocks = tuple(blocks)
        self.source = ProductSpace.polydisk(len(self.blocks), [g.source_constant for g in self.blocks])
        factors, constants = (), ()
        for g in self.blocks:
            factors += g.target.factors
            constants += g.target.constants
        self.target = ProductSpace(factors, constants)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.concatenate([g(z[..., j]) for j, g in enumerate(self.blocks)], axis=-1)


# JSON ------------------------------------------------------------------------------

def map_from_json(doc) -> IsometryMap:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValueError(f"map descriptor must be an object with a 'kind': {doc!r}")
    kind = doc["kind"]
    if kind == "pth_root":
        return PthRoot(int(doc["p"]))
    if kind == "diagonal":
        return Diagonal(int(doc["p"]))
    if kind == "sharp":
        return SharpComposite(map_from_json(doc["outer"]), map_from_json(doc["inner"]), int(doc["slot"]))
    if kind == "juxtapose":
        return Juxtaposed([map_from_json(d) for d in doc["parts"]])
    if kind == "catalog":
        return catalog_construct(doc["form"], doc.get("params", ()))
    if kind == "constant":
        return ConstantMap([complex(*v) for v in doc["value"]])
    if kind == "unitary":
        from .solver import unitary_map_from_json

        return unitary_map_from_json(doc)
    raise ValueError(f"unknown map kind {kind!r}")
