"""Dissipation coefficients ``b(t) = mu(t) + sigma(t)``.

The principal part is the non-effective damping ``mu0 / (1 + t)``; the
oscillating part is one of three families: identically zero, the power-law
sine ``(1 + t)**p * sin((1 + t)**q)``, or a train of smooth bursts built from a
compactly supported profile. Every coefficient can be evaluated pointwise on
arrays and as a :class:`~osciwave.taylor.Jet` of exact derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Protocol, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize_scalar

from .errors import ContractViolation, DomainError, SmoothnessExceeded
from .taylor import Jet, jet_sin_cos, power_of_affine

MAX_MU_ORDER = 12

# Kind codes shared with the compiled integrator kernel.
PRINCIPAL_CANONICAL = 0
PRINCIPAL_CONSTANT = 1
SIGMA_ZERO = 0
SIGMA_SINE = 1
SIGMA_BUMP = 2

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


class Principal(Protocol):
    """Interface of a monotone principal damping part."""

    mu0: float

    def mu(self, t: ArrayLike) -> NDArray[np.float64]: ...

    def jet(self, t: float, order: int) -> Jet: ...

    def integral(self, t: ArrayLike) -> NDArray[np.float64]: ...

    def eta(self, t: ArrayLike) -> NDArray[np.float64]: ...


@dataclass(frozen=True)
class PrincipalPart:
    """Canonical principal part ``mu(t) = mu0 / (1 + t)`` with ``0 < mu0 < 1``."""

    mu0: float
    T: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.mu0 < 1.0:
            raise ContractViolation(f"mu0 must lie in (0, 1), got {self.mu0}")
        if self.T != 0.0:
            # Normalization mu(0) = mu0 pins the onset time.
            raise ContractViolation("only the onset time T = 0 is supported")

    def mu(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.mu0 / (1.0 + np.asarray(t, dtype=float))

    def jet(self, t: float, order: int) -> Jet:
        if order > MAX_MU_ORDER:
            raise ContractViolation(f"mu jets are limited to order {MAX_MU_ORDER}")
        return power_of_affine(t, -1.0, order, scale=self.mu0)

    def inverse(self, y: ArrayLike) -> NDArray[np.float64]:
        """Time at which ``mu`` takes the value ``y``."""
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise DomainError("mu takes only positive values")
        return self.mu0 / y - 1.0

    def integral(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.mu0 * np.log1p(np.asarray(t, dtype=float))

    def eta(self, t: ArrayLike) -> NDArray[np.float64]:
        """``exp(-int_0^t mu) = (1 + t)**(-mu0)``."""
        return (1.0 + np.asarray(t, dtype=float)) ** (-self.mu0)


@dataclass(frozen=True)
class ConstantDamping:
    """Constant damping ``b0 >= 0``; used for the free wave and for oracles."""

    value: float

    def __post_init__(self) -> None:
        if not self.value >= 0.0:
            raise ContractViolation(f"constant damping must be >= 0, got {self.value}")

    @property
    def mu0(self) -> float:
        return self.value

    def mu(self, t: ArrayLike) -> NDArray[np.float64]:
        return np.full(np.shape(t), self.value, dtype=float)

    def jet(self, t: float, order: int) -> Jet:
        return Jet.constant(self.value, order)

    def integral(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.value * np.asarray(t, dtype=float)

    def eta(self, t: ArrayLike) -> NDArray[np.float64]:
        return np.exp(-self.value * np.asarray(t, dtype=float))


def _chi_raw(x: NDArray[np.float64], m: int) -> NDArray[np.float64]:
    return np.sin(2.0 * np.pi * x) * (4.0 * x * (1.0 - x)) ** (m + 1)


@lru_cache(maxsize=None)
def profile_normalization(m: int) -> float:
    """Constant ``c_m`` making ``max |chi| = 1``, by golden-section search.

    ``log |chi|`` is concave on ``(0, 1/2)`` so the maximum there is unique,
    and antisymmetry about ``1/2`` covers the other half.
    """
    res = minimize_scalar(
        lambda x: -float(_chi_raw(np.array(x), m)),
        bracket=(0.0, 0.2, 0.5),
        method="golden",
        tol=1e-12,
    )
    return 1.0 / float(-res.fun)


@dataclass(frozen=True)
class BumpProfile:
    """Profile ``chi(tau) = c_m sin(2 pi tau) (4 tau (1 - tau))**(m + 1)`` on ``[0, 1]``."""

    m: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ContractViolation(f"profile smoothness must be >= 1, got {self.m}")

    @property
    def c_m(self) -> float:
        return profile_normalization(self.m)

    def __call__(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= 1.0)
        return np.where(inside, self.c_m * _chi_raw(np.clip(x, 0.0, 1.0), self.m), 0.0)

    def jet(self, x: float, order: int) -> Jet:
        """Jet of the profile at ``x`` in ``[0, 1]``."""
        var = Jet.variable(x, order)
        s, _ = jet_sin_cos(var * (2.0 * np.pi))
        poly = (var * (1.0 - var)) * 4.0
        out = s * self.c_m
        for _ in range(self.m + 1):
            out = out * poly
        return out

    def primitive(self, x: ArrayLike) -> NDArray[np.float64]:
        """``int_0^x chi`` by 32-point Gauss-Legendre (exact to rounding)."""
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        half = 0.5 * x[..., None]
        nodes = half * (_GL_NODES + 1.0)
        vals = self.c_m * _chi_raw(nodes, self.m)
        return (vals * _GL_WEIGHTS).sum(axis=-1) * half[..., 0]


@dataclass(frozen=True)
class Zero:
    """Identically vanishing oscillating part."""

    kind: int = field(default=SIGMA_ZERO, init=False, repr=False)

    def value(self, t: ArrayLike) -> NDArray[np.float64]:
        return np.zeros(np.shape(t))

    def jet(self, t: float, order: int) -> Jet:
        return Jet.zero(order)

    def oscillation_rate(self, t: ArrayLike) -> NDArray[np.float64]:
        return np.zeros(np.shape(t))

    def params(self) -> tuple[float, ...]:
        return (0.0, 0.0, 0.0, 0.0, 0, 0.0)


@dataclass(frozen=True)
class Sine:
    """``sigma(t) = (1 + t)**p * sin((1 + t)**q)`` with ``p >= -1`` and ``q > 1``."""

    p: float
    q: float
    kind: int = field(default=SIGMA_SINE, init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.p >= -1.0:
            raise ContractViolation(f"Sine needs p >= -1, got {self.p}")
        if not self.q > 1.0:
            raise ContractViolation(f"Sine needs q > 1, got {self.q}")

    def value(self, t: ArrayLike) -> NDArray[np.float64]:
        s = 1.0 + np.asarray(t, dtype=float)
        return s**self.p * np.sin(s**self.q)

    def jet(self, t: float, order: int) -> Jet:
        amp = power_of_affine(t, self.p, order)
        phase = power_of_affine(t, self.q, order)
        s, _ = jet_sin_cos(phase)
        return amp * s

    def oscillation_rate(self, t: ArrayLike) -> NDArray[np.float64]:
        """Phase speed ``q (1 + t)**(q - 1)``."""
        return self.q * (1.0 + np.asarray(t, dtype=float)) ** (self.q - 1.0)

    def params(self) -> tuple[float, ...]:
        return (self.p, self.q, 0.0, 0.0, 0, 0.0)


@dataclass(frozen=True)
class Burst:
    """Location of a time inside the ``n``-th burst."""

    n: int
    start: float
    count: int
    tau: float

    @property
    def local(self) -> float:
        """Position inside the current unit cell of the profile."""
        return self.tau - math.floor(self.tau) if self.tau < self.count else 1.0


@dataclass(frozen=True)
class BumpTrain:
    """Train of bursts ``t_n**p chi(t_n**(q-1) (t - t_n))`` at ``t_n = n**r``.

    Burst ``n`` lasts ``N_n t_n**(1-q)`` with ``N_n = floor(n**h)``; the
    profile is repeated over the ``N_n`` unit cells of the rescaled time.
    """

    p: float
    q: float
    r: float
    h: float
    profile: BumpProfile
    kind: int = field(default=SIGMA_BUMP, init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.p >= -1.0:
            raise ContractViolation(f"BumpTrain needs p >= -1, got {self.p}")
        if not self.q > 1.0:
            raise ContractViolation(f"BumpTrain needs q > 1, got {self.q}")
        if not self.r >= 1.0:
            raise ContractViolation(f"BumpTrain needs r >= 1, got {self.r}")
        if not self.h >= 0.0:
            raise ContractViolation(f"BumpTrain needs h >= 0, got {self.h}")
        if self.h > self.r * self.q - 1.0 + 1e-12:
            raise ContractViolation("bursts overlap unless h <= r q - 1")

    @property
    def m(self) -> int:
        return self.profile.m

    def start(self, n: int) -> float:
        return float(n) ** self.r

    def count(self, n: int) -> int:
        return int(math.floor(float(n) ** self.h + 1e-12))

    def length(self, n: int) -> float:
        return self.count(n) * self.start(n) ** (1.0 - self.q)

    def locate(self, t: float) -> Burst | None:
        """Burst containing ``t``, checking the neighbours of ``n = t**(1/r)``."""
        if t < 1.0:
            return None
        n0 = int(math.floor(t ** (1.0 / self.r)))
        for n in (n0 + 1, n0, n0 - 1):
            if n < 1:
                continue
            tn = self.start(n)
            if tn <= t <= tn + self.length(n):
                return Burst(n, tn, self.count(n), tn ** (self.q - 1.0) * (t - tn))
        return None

    def value(self, t: ArrayLike) -> NDArray[np.float64]:
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.zeros_like(flat)
        for i, ti in enumerate(flat):
            b = self.locate(float(ti))
            if b is not None:
                out[i] = b.start**self.p * float(self.profile(b.local))
        return out.reshape(t.shape)

    def jet(self, t: float, order: int) -> Jet:
        if order > self.m:
            raise SmoothnessExceeded(f"BumpTrain is C^{self.m}; order {order} requested")
        b = self.locate(t)
        if b is None:
            return Jet.zero(order)
        scale = b.start ** (self.q - 1.0)
        local = self.profile.jet(b.local, order)
        return Jet(local.coeffs * scale ** np.arange(order + 1)) * b.start**self.p

    def oscillation_rate(self, t: ArrayLike) -> NDArray[np.float64]:
        """Angular speed ``2 pi (m + 2) (1 + t)**(q - 1)`` resolving the profile."""
        return 2.0 * np.pi * (self.m + 2) * (1.0 + np.asarray(t, dtype=float)) ** (self.q - 1.0)

    def params(self) -> tuple[float, ...]:
        return (self.p, self.q, self.r, self.h, self.m, self.profile.c_m)


OscillatingPart = Union[Zero, Sine, BumpTrain]
PrincipalLike = Union[PrincipalPart, ConstantDamping]


@dataclass(frozen=True)
class DissipationCoefficient:
    """``b(t) = mu(t) + sigma(t)`` together with the smoothness order ``m``."""

    principal: PrincipalLike
    oscillating: OscillatingPart = field(default_factory=Zero)
    m: int = 1

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ContractViolation(f"smoothness m must be >= 0, got {self.m}")
        if isinstance(self.oscillating, BumpTrain) and self.m > self.oscillating.m:
            raise SmoothnessExceeded(
                f"coefficient order {self.m} exceeds profile smoothness {self.oscillating.m}"
            )

    @property
    def mu0(self) -> float:
        return self.principal.mu0

    def b(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.principal.mu(t) + self.oscillating.value(t)

    def mu(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.principal.mu(t)

    def sigma(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.oscillating.value(t)

    def jet(self, t: float, order: int) -> Jet:
        return eval_b_jet(self, t, order)

    def kernel_params(self) -> NDArray[np.float64]:
        """Flat parameter vector consumed by the compiled integrator."""
        pkind = PRINCIPAL_CONSTANT if isinstance(self.principal, ConstantDamping) else PRINCIPAL_CANONICAL
        return np.array(
            [pkind, self.principal.mu0, self.oscillating.kind, *self.oscillating.params()],
            dtype=float,
        )


def eval_mu_jet(pp: PrincipalLike, t: float, order: int) -> Jet:
    """Exact jet of the principal part."""
    return pp.jet(t, order)


def eval_sigma_jet(op: OscillatingPart, t: float, order: int) -> Jet:
    """Exact jet of the oscillating part."""
    return op.jet(t, order)


def eval_b_jet(c: DissipationCoefficient, t: float, order: int) -> Jet:
    """Exact jet of ``b = mu + sigma``."""
    return eval_mu_jet(c.principal, t, order) + eval_sigma_jet(c.oscillating, t, order)


def headline_coefficient(m: int = 2) -> DissipationCoefficient:
    """``0.5 / (1 + t) + (1 + t)**0.5 sin((1 + t)**4)``, amplitude at the Gevrey-2 threshold."""
    return DissipationCoefficient(PrincipalPart(0.5), Sine(0.5, 4.0), m=m)
