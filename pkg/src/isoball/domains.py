"""Balls, polydisks and classical domains: potentials, kernels, automorphisms.

Potentials are ``-log(bracket)`` where ``bracket`` is the base of the
Bergman kernel ``c_D * bracket**m``. Metric values reported anywhere in the
package are ``d^2/dz dzbar`` of these potentials, with no extra factor for
the curvature normalisation; the isometry equations do not depend on it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Rejection


# product spaces -----------------------------------------------------------

@dataclass(frozen=True)
class Factor:
    kind: str  # "disk" or "ball"
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("disk", "ball"):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.dim < 1 or (self.kind == "disk" and self.dim != 1):
            raise ValueError(f"bad dimension {self.dim} for a {self.kind}")

    def to_json(self):
        return {self.kind: self.dim}


@dataclass(frozen=True)
class ProductSpace:
    """Ordered product of disks and balls with positive conformal constants."""

    factors: tuple[Factor, ...]
    constants: tuple[float, ...] = field(default=())

    def __post_init__(self):
        factors = tuple(self.factors)
        constants = tuple(float(c) for c in self.constants) or (1.0,) * len(factors)
        if len(constants) != len(factors):
            raise ValueError("one constant per factor is required")
        if any(not c > 0 for c in constants):
            raise ValueError(f"conformal constants must be positive, got {constants}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "constants", constants)

    @classmethod
    def polydisk(cls, p: int, constants=None) -> "ProductSpace":
        return cls((Factor("disk"),) * p, tuple(constants or ()))

    @classmethod
    def disk_times_ball(cls, n: int, constants=None) -> "ProductSpace":
        return cls((Factor("disk"), Factor("ball", n)), tuple(constants or ()))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def slices(self) -> list[slice]:
        out, start = [], 0
        for d in self.dims:
            out.append(slice(start, start + d))
            start += d
        return out

    def with_constants(self, constants) -> "ProductSpace":
        return ProductSpace(self.factors, tuple(constants))

    def brackets(self, points: np.ndarray) -> np.ndarray:
        """``1 - ||F_i||^2`` per factor; ``points`` has trailing axis ``total_dim``."""
        points = np.asarray(points, dtype=complex)
        return np.stack([1.0 - np.sum(np.abs(points[..., s]) ** 2, axis=-1) for s in self.slices()], axis=-1)

    def polarized_brackets(self, z_points: np.ndarray, w_points: np.ndarray) -> np.ndarray:
        """``1 - F_i(Z) . conj(F_i(W))`` per factor."""
        z_points = np.asarray(z_points, dtype=complex)
        w_points = np.asarray(w_points, dtype=complex)
        return np.stack(
            [1.0 - np.sum(z_points[..., s] * np.conj(w_points[..., s]), axis=-1) for s in self.slices()],
            axis=-1,
        )

    def potential(self, points: np.ndarray) -> np.ndarray:
        """``sum_i mu_i * (-log(1 - ||F_i||^2))``."""
        b = self.brackets(points)
        if np.any(b <= 0):
            raise Rejection("potential", "point outside domain")
        return -np.log(b) @ np.asarray(self.constants)

    def to_json(self) -> dict:
        return {"factors": [f.to_json() for f in self.factors], "constants": list(self.constants)}

    @classmethod
    def from_json(cls, doc: dict) -> "ProductSpace":
        factors = []
        for item in doc["factors"]:
            if len(item) != 1:
                raise ValueError(f"factor descriptor must have one key: {item}")
            (kind, dim), = item.items()
            factors.append(Factor(kind, int(dim)))
        return cls(tuple(factors), tuple(doc.get("constants", ())))


# Bergman kernels of classical domains --------------------------------------

KERNEL_KINDS = ("ball", "polydisk", "type1", "type4")


@dataclass(frozen=True)
class KernelSpec:
    """``K(Z, Zbar) = c_D * bracket(Z) ** m``.

    ``c_D`` is carried for completeness; it has zero Hessian and every check
    here runs with ``c_D = 1``.
    """

    kind: str
    shape: tuple[int, ...]
    c_D: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise Rejection("KernelSpec", f"unsupported domain kind {self.kind!r}")
        shape = tuple(int(s) for s in self.shape)
        want = 2 if self.kind == "type1" else 1
        if len(shape) != want or any(s < 1 for s in shape):
            raise Rejection("KernelSpec", f"bad shape {shape} for {self.kind}")
        if self.kind == "type1" and shape[0] > shape[1]:
            raise Rejection("KernelSpec", "type I needs p <= q")
        if not self.c_D > 0:
            raise Rejection("KernelSpec", "c_D must be positive")
        object.__setattr__(self, "shape", shape)

    @property
    def dim(self) -> int:
        return self.shape[0] * self.shape[1] if self.kind == "type1" else self.shape[0]

    @property
    def exponent(self) -> int:
        if self.kind == "ball":
            return -(self.shape[0] + 1)
        if self.kind == "polydisk":
            return -2
        if self.kind == "type1":
            return -(self.shape[0] + self.shape[1])
        return -self.shape[0]

    def bracket(self, Z) -> float:
        Z = np.asarray(Z, dtype=complex)
        if self.kind == "ball":
            return float(1.0 - np.vdot(Z, Z).real)
        if self.kind == "polydisk":
            return float(np.prod(1.0 - np.abs(Z) ** 2))
        if self.kind == "type1":
            p, q = self.shape
            M = Z.reshape(p, q)
            return float(np.linalg.det(np.eye(p) - M @ M.conj().T).real)
        zz = np.vdot(Z, Z).real
        if zz >= 2:
            return -1.0
        return float(1.0 - zz + 0.25 * abs(np.dot(Z, Z)) ** 2)

    def to_json(self) -> dict:
        return {"kind": self.kind, "shape": list(self.shape), "c_D": self.c_D}

    @classmethod
    def from_json(cls, doc: dict) -> "KernelSpec":
        return cls(doc["kind"], tuple(doc["shape"]), float(doc.get("c_D", 1.0)))


def kahler_potential(spec: KernelSpec, Z) -> float:
    """``-log(bracket)``; for polydisks the per-factor terms are summed with unit weights."""
    b = spec.bracket(Z)
    if spec.kind == "polydisk":
        if np.any(np.abs(np.asarray(Z)) >= 1):
            raise Rejection("kahler_potential", "outside domain")
    if not b > 0:
        raise Rejection("kahler_potential", "outside domain")
    return -math.log(b)


def bergman_kernel(spec: KernelSpec, Z) -> float:
    b = spec.bracket(Z)
    if not b > 0:
        raise Rejection("bergman_kernel", "outside domain")
    if spec.kind == "polydisk":
        return spec.c_D * float(np.prod((1.0 - np.abs(np.asarray(Z)) ** 2) ** -2.0))
    return spec.c_D * b**spec.exponent


def det_minor_expansion(Z) -> tuple[float, float]:
    """``det(I - Z Z*)`` directly and as the alternating sum of squared minors."""
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    p, q = Z.shape
    if p > q:
        raise Rejection("det_minor_expansion", f"need p <= q, got {p}x{q}")
    lhs = float(np.linalg.det(np.eye(p) - Z @ Z.conj().T).real)
    rhs = 1.0
    for k in range(1, p + 1):
        total = 0.0
        for rows in itertools.combinations(range(p), k):
            sub = Z[list(rows), :]
            for cols in itertools.combinations(range(q), k):
                total += abs(np.linalg.det(sub[:, list(cols)])) ** 2
        rhs += (-1) ** k * total
    return lhs, rhs


# automorphisms ---------------------------------------------------------------

@dataclass(frozen=True)
class DiskAutomorphism:
    """``z -> exp(i theta) (z - a) / (1 - conj(a) z)``."""

    a: complex = 0j
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "theta", float(self.theta))
        if abs(self.a) >= 1:
            raise Rejection("DiskAutomorphism", f"|a| = {abs(self.a)} is not inside the disk")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.exp(1j * self.theta) * (z - self.a) / (1 - np.conj(self.a) * z)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return np.exp(1j * self.theta) * (1 - abs(self.a) ** 2) / (1 - np.conj(self.a) * z) ** 2

    def inverse(self) -> "DiskAutomorphism":
        return DiskAutomorphism(-self.a * np.exp(1j * self.theta), -self.theta)

    def compose(self, other: "DiskAutomorphism") -> "DiskAutomorphism":
        """``self o other``."""
        z0 = other.inverse()(self.inverse()(0.0))
        img = self(other(0.0))
        # self(other(z)) = e^{i t}(z - z0)/(1 - conj(z0) z); read t off at z = 0
        base = -z0
        phase = img / base if abs(base) > 1e-15 else self(other(0.5)) / 0.5
        return DiskAutomorphism(complex(z0), float(np.angle(phase)))

    def mobius(self) -> tuple[complex, complex, complex, complex]:
        e = np.exp(1j * self.theta)
        return e, -e * self.a, -np.conj(self.a), 1.0


def ball_involution(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    """The involution of the unit ball exchanging ``a`` and ``0``.

    Vectorised over leading axes of ``z``.
    """
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    aa = float(np.vdot(a, a).real)
    if aa == 0:
        return -z
    s = math.sqrt(1 - aa)
    za = z @ np.conj(a)  # <z, a>
    proj = za[..., None] * a / aa
    return (a - proj - s * (z - proj)) / (1 - za)[..., None]


def ball_shift(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``-phi_a(z)``: sends ``a`` to 0, is the identity for ``a = 0``, inverse ``ball_shift(-a, .)``."""
    return -ball_involution(a, z)


@dataclass(frozen=True, eq=False)
class BallAutomorphism:
    """``z -> U psi_a(z)`` with ``psi_a = -phi_a`` (the involution at ``a`` up to sign), then a unitary.

    The sign makes ``a = 0`` the pure unitary map.
    """

    a: np.ndarray
    unitary: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex).reshape(-1)
        U = np.asarray(self.unitary, dtype=complex)
        if U.shape != (a.size, a.size):
            raise ValueError("unitary shape does not match base point")
        if np.linalg.norm(a) >= 1:
            raise Rejection("BallAutomorphism", "base point outside the ball")
        if np.max(np.abs(U @ U.conj().T - np.eye(a.size))) > 1e-10:
            raise Rejection("BallAutomorphism", "unitary part is not unitary")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "unitary", U)

    @classmethod
    def identity(cls, n: int) -> "BallAutomorphism":
        return cls(np.zeros(n), np.eye(n))

    def __call__(self, z):
        return ball_shift(self.a, z) @ self.unitary.T

    def inverse(self) -> "BallAutomorphism":
        # psi_a^-1 = psi_{-a} and psi_{-a}(U* w) = U* psi_{-U a}(w)
        return BallAutomorphism(-(self.unitary @ self.a), self.unitary.conj().T)


def apply_automorphism(auto, Z):
    """Apply a disk or ball automorphism, rejecting points outside the domain."""
    Z = np.asarray(Z, dtype=complex)
    if isinstance(auto, DiskAutomorphism):
        if np.any(np.abs(Z) >= 1):
            raise Rejection("apply_automorphism", "point not inside the disk")
        return auto(Z)
    if np.any(np.linalg.norm(np.atleast_1d(Z), axis=-1) >= 1):
        raise Rejection("apply_automorphism", "point not inside the ball")
    return auto(Z)


def ddbar_fd(func, z, h: float = 1e-4):
    """Central-difference ``d^2 f / dz dzbar = (f_xx + f_yy) / 4``, vectorised over ``z``."""
    z = np.asarray(z, dtype=complex)
    f0 = func(z)
    lap = func(z + h) + func(z - h) + func(z + 1j * h) + func(z - 1j * h) - 4 * f0
    return lap / (4 * h * h)
