"""Truncated power series over the complex numbers.

A :class:`TruncatedSeries` is the germ ``sum_k c_k (w - center)^k`` kept to
order ``N``. Every binary operation truncates to the smaller order of its
operands; nothing is padded. Values are immutable.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import Rejection

DEFAULT_ORDER = 64

# Tolerance for "same center" and for constant-term matching in composition.
CENTER_TOL = 1e-12

_EPS = np.finfo(float).eps


def _as_coeffs(values) -> np.ndarray:
    arr = np.array(values, dtype=complex).reshape(-1)
    if arr.size == 0:
        raise ValueError("a series needs at least one coefficient")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    center: complex
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "coeffs", _as_coeffs(self.coeffs))

    @classmethod
    def constant(cls, value, order: int = DEFAULT_ORDER, center=0j) -> "TruncatedSeries":
        c = np.zeros(order + 1, dtype=complex)
        c[0] = value
        return cls(center, c)

    @classmethod
    def identity(cls, order: int = DEFAULT_ORDER, center=0j) -> "TruncatedSeries":
        """The coordinate function ``w`` expanded at ``center``."""
        c = np.zeros(order + 1, dtype=complex)
        c[0] = center
        if order >= 1:
            c[1] = 1.0
        return cls(center, c)

    @classmethod
    def from_polynomial(cls, poly: Sequence[complex], order: int = DEFAULT_ORDER,
                        center=0j) -> "TruncatedSeries":
        """Taylor expansion at ``center`` of a polynomial given low-to-high."""
        shifted = _taylor_shift(np.asarray(poly, dtype=complex), complex(center))
        c = np.zeros(order + 1, dtype=complex)
        m = min(order + 1, shifted.size)
        c[:m] = shifted[:m]
        return cls(center, c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    def __getitem__(self, k):
        return self.coeffs[k]

    def __repr__(self):
        head = ", ".join(f"{c:.4g}" for c in self.coeffs[:4])
        return f"TruncatedSeries(center={self.center:.4g}, N={self.order}, [{head}, ...])"

    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise ValueError(f"cannot raise truncation order {self.order} to {order}")
        return TruncatedSeries(self.center, self.coeffs[: order + 1])

    # arithmetic -------------------------------------------------------

    def _binary_parts(self, other, op):
        if isinstance(other, TruncatedSeries):
            _check_centers(self, other, op)
            n = min(self.order, other.order)
            return self.coeffs[: n + 1], other.coeffs[: n + 1], n
        return None

    def __add__(self, other):
        parts = self._binary_parts(other, "add")
        if parts is None:
            c = self.coeffs.copy()
            c[0] += other
            return TruncatedSeries(self.center, c)
        a, b, _ = parts
        return TruncatedSeries(self.center, a + b)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self.center, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_multiply(self, other)
        return TruncatedSeries(self.center, self.coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_divide(self, other)
        return TruncatedSeries(self.center, self.coeffs / other)

    def __rtruediv__(self, other):
        return series_divide(TruncatedSeries.constant(other, self.order, self.center), self)

    def __pow__(self, exponent):
        if isinstance(exponent, int) and exponent >= 0:
            out = TruncatedSeries.constant(1.0, self.order, self.center)
            base = self
            e = exponent
            while e:
                if e & 1:
                    out = out * base
                base = base * base
                e >>= 1
            return out
        return series_fractional_power(self, exponent)

    def __call__(self, z):
        return _horner(self.coeffs, np.asarray(z, dtype=complex) - self.center)

    def derivative(self) -> "TruncatedSeries":
        if self.order == 0:
            return TruncatedSeries(self.center, [0.0])
        k = np.arange(1, self.order + 1)
        return TruncatedSeries(self.center, self.coeffs[1:] * k)

    def distance(self, other: "TruncatedSeries", terms: int | None = None) -> float:
        """Max coefficient difference over the first ``terms`` coefficients."""
        _check_centers(self, other, "distance")
        n = min(self.order, other.order) + 1
        if terms is not None:
            n = min(n, terms)
        return float(np.max(np.abs(self.coeffs[:n] - other.coeffs[:n])))

    def to_json(self) -> dict:
        return {
            "center": [self.center.real, self.center.imag],
            "coeffs": [[c.real, c.imag] for c in self.coeffs.tolist()],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TruncatedSeries":
        center = complex(*doc["center"])
        coeffs = [complex(re, im) for re, im in doc["coeffs"]]
        return cls(center, coeffs)


def _check_centers(a: TruncatedSeries, b: TruncatedSeries, op: str):
    if abs(a.center - b.center) > CENTER_TOL * max(1.0, abs(a.center)):
        raise Rejection(f"series_{op}", f"mismatched centers {a.center} and {b.center}")


# raw coefficient kernels --------------------------------------------------

def _mul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    return np.convolve(a[: n + 1], b[: n + 1])[: n + 1]


def _div(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    if b[0] == 0:
        raise Rejection("series_divide", "divisor vanishes at the center")
    q = np.zeros(n + 1, dtype=complex)
    inv = 1.0 / b[0]
    for k in range(n + 1):
        acc = a[k]
        if k:
            acc -= np.dot(b[1 : k + 1], q[k - 1 :: -1][:k])
        q[k] = acc * inv
    return q


def _compose(outer: np.ndarray, inner: np.ndarray, n: int) -> np.ndarray:
    # Horner on series; inner[0] must be zero
    res = np.zeros(n + 1, dtype=complex)
    for c in outer[: n + 1][::-1]:
        res = _mul(res, inner, n)
        res[0] += c
    return res


def _horner(coeffs: np.ndarray, d):
    out = np.zeros_like(d, dtype=complex) + coeffs[-1]
    for c in coeffs[-2::-1]:
        out = out * d + c
    return out


def _taylor_shift(coeffs: np.ndarray, d: complex) -> np.ndarray:
    a = np.array(coeffs, dtype=complex)
    n = a.size - 1
    if d == 0:
        return a
    for i in range(n):
        for j in range(n - 1, i - 1, -1):
            a[j] += d * a[j + 1]
    return a


# public operations --------------------------------------------------------

def series_multiply(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product truncated at ``min(N_a, N_b)``."""
    _check_centers(a, b, "multiply")
    n = min(a.order, b.order)
    return TruncatedSeries(a.center, _mul(a.coeffs, b.coeffs, n))


def series_divide(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    _check_centers(a, b, "divide")
    n = min(a.order, b.order)
    return TruncatedSeries(a.center, _div(a.coeffs, b.coeffs, n))


def series_compose(outer: TruncatedSeries, inner: TruncatedSeries) -> TruncatedSeries:
    """Taylor coefficients of ``outer(inner(w))`` at ``inner.center``.

    ``outer`` is expanded at some point ``a``; the constant term of
    ``inner`` must equal ``a``. Result order is ``min(N_outer, N_inner)``.
    """
    a = outer.center
    if abs(inner.coeffs[0] - a) > CENTER_TOL * max(1.0, abs(a)):
        raise Rejection(
            "series_compose",
            f"inner constant term {inner.coeffs[0]} does not match outer center {a}; recenter first",
        )
    n = min(outer.order, inner.order)
    shifted = inner.coeffs[: n + 1].copy()
    shifted[0] = 0
    return TruncatedSeries(inner.center, _compose(outer.coeffs, shifted, n))


def series_reversion(f: TruncatedSeries) -> TruncatedSeries:
    """Local inverse ``g`` with ``f(g(v)) = v`` near ``v = f(center)``.

    The returned series is centred at ``f.coeffs[0]`` and takes the value
    ``f.center`` there. Computed by Newton iteration on series, doubling the
    number of correct coefficients each pass.
    """
    n = f.order
    if n < 1 or abs(f.coeffs[1]) <= 1e-14 * max(1.0, np.max(np.abs(f.coeffs))):
        raise Rejection("series_reversion", "not invertible at center (linear coefficient is zero)")
    F = f.coeffs.copy()
    F[0] = 0
    dF = F[1:] * np.arange(1, n + 1)
    G = np.zeros(n + 1, dtype=complex)
    G[1] = 1.0 / F[1]
    m = 1
    while m < n:
        m = min(2 * m, n)
        Gm = G[: m + 1].copy()
        FG = _compose(F[: m + 1], Gm, m)
        FG[1] -= 1.0
        dFG = _compose(dF, Gm, m)
        G = np.zeros(n + 1, dtype=complex)
        G[: m + 1] = Gm - _div(FG, dFG, m)
    # one polishing pass at full order
    FG = _compose(F, G, n)
    FG[1] -= 1.0
    dFG = _compose(dF, G, n)
    G = G - _div(FG, dFG, n)
    G[0] = f.center
    return TruncatedSeries(f.coeffs[0], G)


def series_fractional_power(f: TruncatedSeries, exponent: float) -> TruncatedSeries:
    """``exp(exponent * Log f)`` with the principal logarithm at the center."""
    c0 = f.coeffs[0]
    if c0 == 0:
        raise Rejection(
            "series_fractional_power",
            "constant term is zero; powers at a branch point need analytic continuation",
        )
    n = f.order
    a = f.coeffs
    g = np.zeros(n + 1, dtype=complex)
    g[0] = cmath.exp(exponent * cmath.log(c0))
    inv = 1.0 / c0
    for k in range(1, n + 1):
        j = np.arange(1, k + 1)
        g[k] = np.sum(((exponent + 1) * j - k) * a[1 : k + 1] * g[k - 1 :: -1][:k]) * inv / k
    return TruncatedSeries(f.center, g)


def polyval_series(poly: Sequence[complex], s: TruncatedSeries) -> TruncatedSeries:
    """Apply a polynomial (low-to-high coefficients) to a series."""
    poly = np.asarray(poly, dtype=complex)
    n = s.order
    res = np.zeros(n + 1, dtype=complex)
    for c in poly[::-1]:
        res = _mul(res, s.coeffs, n)
        res[0] += c
    return TruncatedSeries(s.center, res)


def mobius_series(a, b, c, d, s: TruncatedSeries) -> TruncatedSeries:
    """``(a*s + b) / (c*s + d)`` on a series."""
    return (s * a + b) / (s * c + d)


def series_recenter(f: TruncatedSeries, new_center) -> TruncatedSeries:
    """Re-expand the truncated polynomial at ``new_center``.

    High-order coefficients lose accuracy in proportion to the shift; use
    only for shifts well inside the radius of convergence.
    """
    d = complex(new_center) - f.center
    return TruncatedSeries(new_center, _taylor_shift(f.coeffs, d))


@dataclass(frozen=True)
class SeriesValue:
    value: complex
    tail_bound: float
    reliable: bool
    radius: float


def radius_estimate(f: TruncatedSeries, window: int = 8) -> float:
    """Convergence radius guessed from the trailing coefficients.

    Log-moduli of the last ``window`` significant coefficients are fitted by
    a line; the radius is ``exp(-slope)``. Trailing coefficients at the
    rounding floor mean the series is numerically a polynomial.
    """
    mags = np.abs(f.coeffs)
    n = f.order
    if n == 0:
        return math.inf
    floor = 64 * _EPS * max(float(mags.max()), 1e-300)
    tail = mags[max(1, n - window + 1):]
    if np.all(tail <= floor):
        return math.inf
    idx = np.arange(max(1, n - window + 1), n + 1)
    keep = mags[idx] > floor
    ks = idx[keep]
    logs = np.log(mags[ks])
    if ks.size == 1:
        k = int(ks[0])
        return float(mags[k] ** (-1.0 / k))
    slope = np.polyfit(ks, logs, 1)[0]
    return float(math.exp(-slope))


def series_evaluate(f: TruncatedSeries, z) -> SeriesValue:
    """Horner evaluation with a geometric truncation-tail bound."""
    z = complex(z)
    d = abs(z - f.center)
    r = radius_estimate(f)
    value = complex(f(z))
    n = f.order
    mags = np.abs(f.coeffs)
    floor = 64 * _EPS * max(float(mags.max()), 1e-300)
    if math.isinf(r):
        return SeriesValue(value, floor * (1 + d) ** n, True, r)
    q = d / r
    if q >= 1:
        return SeriesValue(value, math.inf, False, r)
    cn = max(float(mags[n]), floor)
    tail = cn * d**n * q / (1 - q)
    return SeriesValue(value, float(tail), True, r)


def taylor_coefficients(func, center, radius: float, order: int, points: int | None = None) -> TruncatedSeries:
    """Taylor coefficients of an analytic callable by the trapezoid rule on a circle.

    Only the first few coefficients are accurate: coefficient ``k`` carries an
    absolute error of roughly ``eps * max|f| / radius**k``.
    """
    m = points or max(4 * (order + 1), 64)
    t = np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.asarray(func(complex(center) + radius * t), dtype=complex)
    c = np.fft.fft(vals) / m
    c = c[: order + 1] / radius ** np.arange(order + 1)
    return TruncatedSeries(center, c)
