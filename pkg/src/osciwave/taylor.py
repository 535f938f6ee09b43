"""Truncated Taylor-jet arithmetic.

A :class:`Jet` stores normalized Taylor coefficients ``c_j = f^(j)(t0) / j!``
of a function at a base point. Products, reciprocals and square roots are
computed by the usual recurrences, which gives exact higher derivatives of
composite coefficient expressions without any symbolic bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation, DomainError, SmoothnessExceeded


class JetOrderMismatch(ContractViolation):
    """Raised when two jets of different order are combined."""


class JetBaseZeroError(DomainError, ZeroDivisionError):
    """Raised when a reciprocal is taken of a jet vanishing at its base point."""


class JetBranchError(DomainError):
    """Raised when a square root is requested off the principal branch."""


@dataclass(frozen=True, eq=False)
class Jet:
    """Taylor coefficients ``c_0..c_m`` of a function at a base point."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        if c.ndim != 1 or c.size == 0:
            raise ValueError("jet coefficients must be a non-empty 1-D array")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def of(cls, values: Sequence[complex] | np.ndarray) -> Jet:
        return cls(np.asarray(values, dtype=complex))

    @classmethod
    def constant(cls, value: complex, order: int) -> Jet:
        c = np.zeros(order + 1, dtype=complex)
        c[0] = value
        return cls(c)

    @classmethod
    def one(cls, order: int) -> Jet:
        return cls.constant(1.0, order)

    @classmethod
    def zero(cls, order: int) -> Jet:
        return cls.constant(0.0, order)

    @classmethod
    def variable(cls, t0: float, order: int) -> Jet:
        """Jet of the identity map ``t -> t`` at ``t0``."""
        c = np.zeros(order + 1, dtype=complex)
        c[0] = t0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs: Sequence[complex]) -> Jet:
        d = np.asarray(derivs, dtype=complex)
        fact = np.array([math.factorial(j) for j in range(d.size)], dtype=float)
        return cls(d / fact)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def value(self) -> complex:
        return complex(self.coeffs[0])

    def derivative(self, j: int) -> complex:
        """The ``j``-th derivative ``j! c_j`` at the base point."""
        if not 0 <= j <= self.order:
            raise IndexError(f"derivative order {j} outside 0..{self.order}")
        return complex(math.factorial(j) * self.coeffs[j])

    def derivatives(self) -> np.ndarray:
        fact = np.array([math.factorial(j) for j in range(self.order + 1)], dtype=float)
        return self.coeffs * fact

    def shift(self) -> Jet:
        """Jet of ``f'`` at the same base point, one order lower."""
        if self.order == 0:
            raise SmoothnessExceeded("cannot differentiate an order-0 jet")
        j = np.arange(1, self.order + 1)
        return Jet(self.coeffs[1:] * j)

    def truncate(self, order: int) -> Jet:
        if order > self.order:
            raise JetOrderMismatch(f"cannot raise order {self.order} to {order}")
        return Jet(self.coeffs[: order + 1])

    def conj(self) -> Jet:
        return Jet(np.conj(self.coeffs))

    @property
    def real(self) -> Jet:
        return Jet(self.coeffs.real)

    @property
    def imag(self) -> Jet:
        return Jet(self.coeffs.imag)

    def _coerce(self, other: object) -> Jet:
        if isinstance(other, Jet):
            if other.order != self.order:
                raise JetOrderMismatch(f"orders {self.order} and {other.order} differ")
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return Jet.constant(complex(other), self.order)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other: object) -> Jet:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Jet(self.coeffs + o.coeffs)

    __radd__ = __add__

    def __neg__(self) -> Jet:
        return Jet(-self.coeffs)

    def __sub__(self, other: object) -> Jet:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Jet(self.coeffs - o.coeffs)

    def __rsub__(self, other: object) -> Jet:
        return -(self - other)

    def __mul__(self, other: object) -> Jet:
        if isinstance(other, (int, float, complex, np.number)):
            return Jet(self.coeffs * other)
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return jet_mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> Jet:
        if isinstance(other, (int, float, complex, np.number)):
            return Jet(self.coeffs / other)
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return jet_mul(self, jet_reciprocal(o))

    def __rtruediv__(self, other: object) -> Jet:
        return jet_reciprocal(self) * other

    def __repr__(self) -> str:
        return f"Jet({self.coeffs.tolist()!r})"


def jet_mul(a: Jet, b: Jet) -> Jet:
    """Cauchy product truncated at the common order."""
    if a.order != b.order:
        raise JetOrderMismatch(f"orders {a.order} and {b.order} differ")
    m = a.order
    return Jet(np.convolve(a.coeffs, b.coeffs)[: m + 1])


def jet_reciprocal(a: Jet) -> Jet:
    """Jet of ``1/f`` by the recurrence ``r_k = -(sum_{j>=1} a_j r_{k-j}) / a_0``."""
    c = a.coeffs
    if c[0] == 0:
        raise JetBaseZeroError("jet vanishes at its base point")
    r = np.zeros_like(c)
    r[0] = 1.0 / c[0]
    for k in range(1, c.size):
        r[k] = -np.dot(c[1 : k + 1], r[k - 1 :: -1][:k]) * r[0]
    return Jet(r)


def jet_sqrt(a: Jet) -> Jet:
    """Principal square root, requiring a positive real part at the base point."""
    c = a.coeffs
    if not c[0].real > 0:
        raise JetBranchError(f"square root needs Re c_0 > 0, got {c[0]}")
    s = np.zeros_like(c)
    s[0] = np.sqrt(c[0])
    for k in range(1, c.size):
        acc = np.dot(s[1:k], s[k - 1 : 0 : -1]) if k > 1 else 0.0
        s[k] = (c[k] - acc) / (2.0 * s[0])
    return Jet(s)


def jet_exp(a: Jet) -> Jet:
    """Jet of ``exp(f)`` from ``g' = f' g``."""
    c = a.coeffs
    e = np.zeros_like(c)
    e[0] = np.exp(c[0])
    for k in range(1, c.size):
        j = np.arange(1, k + 1)
        e[k] = np.dot(j * c[1 : k + 1], e[k - 1 :: -1][:k]) / k
    return Jet(e)


def jet_log(a: Jet) -> Jet:
    """Jet of ``log(f)`` on the principal branch."""
    c = a.coeffs
    if c[0] == 0:
        raise JetBaseZeroError("log of a jet vanishing at its base point")
    g = np.zeros_like(c)
    g[0] = np.log(c[0])
    for k in range(1, c.size):
        j = np.arange(1, k)
        acc = np.dot(j * g[1:k], c[k - 1 : 0 : -1]) if k > 1 else 0.0
        g[k] = (k * c[k] - acc) / (k * c[0])
    return Jet(g)


def jet_pow(a: Jet, exponent: float) -> Jet:
    """Jet of ``f**exponent`` for a base value off the negative real axis."""
    return jet_exp(jet_log(a) * exponent)


def jet_sin_cos(a: Jet) -> tuple[Jet, Jet]:
    """Jets of ``sin(f)`` and ``cos(f)`` from the coupled recurrence."""
    c = a.coeffs
    s = np.zeros_like(c)
    co = np.zeros_like(c)
    s[0] = np.sin(c[0])
    co[0] = np.cos(c[0])
    for k in range(1, c.size):
        jc = np.arange(1, k + 1) * c[1 : k + 1]
        s[k] = np.dot(jc, co[k - 1 :: -1][:k]) / k
        co[k] = -np.dot(jc, s[k - 1 :: -1][:k]) / k
    return Jet(s), Jet(co)


def power_of_affine(t0: float, exponent: float, order: int, scale: float = 1.0) -> Jet:
    """Jet of ``scale * (1 + t)**exponent`` at ``t0`` via binomial coefficients."""
    base = 1.0 + t0
    c = np.empty(order + 1)
    c[0] = scale * base**exponent
    for k in range(1, order + 1):
        c[k] = c[k - 1] * (exponent - k + 1) / (k * base)
    return Jet(c)
