"""Zone geometry in the ``(t, |xi|)`` plane.

The boundary curves are ``t_D(r) = mu^{-1}(mu0 r / N)`` for ``r <= N`` and
``t_H(r) = Theta^{-1}(zeta(r / N))`` for ``r >= N``, where
``zeta(r) = r / rho(r)`` comes from the weight of the initial-data space.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .coeffs import PrincipalPart
from .errors import ContractViolation, DomainError
from .rates import RateFunctions


@dataclass(frozen=True)
class Unit:
    """Trivial weight ``rho = 1``; ``zeta`` is the identity."""

    def rho(self, r: ArrayLike) -> NDArray[np.float64]:
        return np.ones(np.shape(r))

    def zeta(self, r: ArrayLike) -> NDArray[np.float64]:
        return np.asarray(r, dtype=float)


@dataclass(frozen=True)
class Log:
    """``rho(r) = log(e + r)``, the Sobolev scale."""

    def rho(self, r: ArrayLike) -> NDArray[np.float64]:
        return np.log(math.e + np.asarray(r, dtype=float))

    def zeta(self, r: ArrayLike) -> NDArray[np.float64]:
        r = np.asarray(r, dtype=float)
        return r / self.rho(r)


@dataclass(frozen=True)
class Gevrey:
    """``rho(r) = (1 + r)**(1/nu)``, the Gevrey class of order ``nu > 1``."""

    nu: float

    def __post_init__(self) -> None:
        if not self.nu > 1.0:
            raise ContractViolation(f"Gevrey order must exceed 1, got {self.nu}")

    def rho(self, r: ArrayLike) -> NDArray[np.float64]:
        return (1.0 + np.asarray(r, dtype=float)) ** (1.0 / self.nu)

    def zeta(self, r: ArrayLike) -> NDArray[np.float64]:
        r = np.asarray(r, dtype=float)
        return r / self.rho(r)


WeightFunction = Union[Unit, Log, Gevrey]


def zeta_inverse(w: WeightFunction, y: float, rtol: float = 1e-12) -> float:
    """Inverse of ``zeta`` by bisection on ``[0, R]`` with ``R`` doubled until ``zeta(R) >= y``."""
    if not y > 0.0:
        raise DomainError(f"zeta^-1 needs y > 0, got {y}")
    if isinstance(w, Unit):
        return float(y)
    hi = 1.0
    while float(w.zeta(hi)) < y:
        hi *= 2.0
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if float(w.zeta(mid)) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class Zone(enum.Enum):
    DISSIPATIVE = "Z_D"
    HYPERBOLIC = "Z_H"
    INTERMEDIATE_LOW = "Z_I1"
    INTERMEDIATE_HIGH = "Z_I2"


@dataclass(frozen=True)
class ZonePartition:
    """Zones for a given ``N``, principal part, rates and weight.

    On construction ``Theta`` is rescaled so that ``zeta^{-1}(Theta(0)) = 1``,
    which makes both boundary curves start at ``(0, N)``.
    """

    N: float
    principal: PrincipalPart
    theta: RateFunctions
    weight: WeightFunction = field(default_factory=Unit)

    def __post_init__(self) -> None:
        if not self.N >= 1.0:
            raise ContractViolation(f"N must be >= 1, got {self.N}")
        normalized = self.theta.with_theta_scale(float(self.weight.zeta(1.0)))
        object.__setattr__(self, "theta", normalized)

    def t_dissipative(self, r: float) -> float | None:
        return t_dissipative(self, r)

    def t_hyperbolic(self, r: float) -> float | None:
        return t_hyperbolic(self, r)

    def classify(self, t: float, xi_norm: float) -> Zone:
        return classify(self, t, xi_norm)


def t_dissipative(zp: ZonePartition, r: float) -> float | None:
    """``mu^{-1}(mu0 r / N)``; ``None`` when ``r > N`` (empty zone)."""
    if r > zp.N:
        return None
    y = zp.principal.mu0 * r / zp.N
    if y <= 0.0:
        return math.inf
    with np.errstate(over="ignore"):
        return float(zp.principal.inverse(y))


def t_hyperbolic(zp: ZonePartition, r: float) -> float | None:
    """``Theta^{-1}(zeta(r / N))``; ``None`` when ``r < N`` (empty zone)."""
    if r < zp.N:
        return None
    return max(0.0, float(zp.theta.theta_inverse(zp.weight.zeta(r / zp.N))))


def classify(zp: ZonePartition, t: float, xi_norm: float) -> Zone:
    """Zone of ``(t, |xi|)``; shared boundaries go to Z_D, then Z_H, then Z_I1."""
    if t < 0 or xi_norm < 0:
        raise DomainError("classify needs t >= 0 and |xi| >= 0")
    if xi_norm <= zp.N and t <= t_dissipative(zp, xi_norm):
        return Zone.DISSIPATIVE
    if xi_norm >= zp.N and t <= t_hyperbolic(zp, xi_norm):
        return Zone.HYPERBOLIC
    return Zone.INTERMEDIATE_LOW if xi_norm <= zp.N else Zone.INTERMEDIATE_HIGH


def boundary_table(zp: ZonePartition, r: ArrayLike) -> NDArray[np.float64]:
    """Rows ``(r, t_D, t_H)`` with ``nan`` where a curve is undefined."""
    rows = []
    for ri in np.asarray(r, dtype=float):
        td = t_dissipative(zp, ri)
        th = t_hyperbolic(zp, ri)
        rows.append((ri, math.nan if td is None else td, math.nan if th is None else th))
    return np.array(rows, dtype=float).reshape(-1, 3)
