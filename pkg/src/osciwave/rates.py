"""Power-law rate functions ``Theta`` and ``Xi``."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ContractViolation


@dataclass(frozen=True)
class RateFunctions:
    """``Theta(t) = theta_scale (1+t)**(-alpha)`` and ``Xi(t) = scale (1+t)**(-beta)``.

    ``alpha < 0`` makes ``Theta`` strictly increasing. ``scale`` is the common
    constant absorbed into ``Xi``; ``theta_scale`` is fixed by the zone
    normalization and defaults to one.
    """

    alpha: float
    beta: float
    scale: float = 1.0
    theta_scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.alpha < 0.0:
            raise ContractViolation(f"Theta must increase: need alpha < 0, got {self.alpha}")
        if not (self.scale > 0.0 and self.theta_scale > 0.0):
            raise ContractViolation("rate constants must be positive")

    @classmethod
    def for_sine(cls, p: float, q: float, m: int, scale: float = 1.0) -> RateFunctions:
        """``alpha_1 = p - q + 2`` and ``beta_1 = -q + 1 + (-p + q - 1)/(m + 1)``."""
        return cls(sine_alpha(p, q), sine_beta(p, q, m), scale)

    @classmethod
    def for_bump_train(cls, p: float, q: float, r: float, h: float, m: int, scale: float = 1.0) -> RateFunctions:
        """``alpha_2 = p - 2q + 2 + (h + 1)/r`` with the same ``beta_1`` as the sine family."""
        return cls(bump_alpha(p, q, r, h), sine_beta(p, q, m), scale)

    def theta(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.theta_scale * (1.0 + np.asarray(t, dtype=float)) ** (-self.alpha)

    def theta_inverse(self, y: ArrayLike) -> NDArray[np.float64]:
        return (np.asarray(y, dtype=float) / self.theta_scale) ** (-1.0 / self.alpha) - 1.0

    def xi(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.scale * (1.0 + np.asarray(t, dtype=float)) ** (-self.beta)

    def with_theta_scale(self, theta_scale: float) -> RateFunctions:
        return replace(self, theta_scale=theta_scale)


def sine_alpha(p: float, q: float) -> float:
    return p - q + 2.0


def sine_beta(p: float, q: float, m: int) -> float:
    return -q + 1.0 + (-p + q - 1.0) / (m + 1.0)


def bump_alpha(p: float, q: float, r: float, h: float) -> float:
    return p - 2.0 * q + 2.0 + (h + 1.0) / r
