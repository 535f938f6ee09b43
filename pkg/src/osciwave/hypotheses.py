"""Numerical checks of the structural hypotheses and the amplitude thresholds.

The constants hidden in the hypotheses are never pinned down analytically, so
every check reports a measured supremum over a grid. A supremum is reported
as ``inf`` when the check diverges (the hypothesis fails) or when a power law
is still growing at the end of the grid.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .coeffs import BumpTrain, DissipationCoefficient, OscillatingPart
from .errors import DomainError, HypothesisViolated, SmoothnessExceeded
from .rates import RateFunctions
from .tails import TailEstimate
from .tails import stabilization_tail as _stabilization_tail
from .zones import Gevrey, Unit, WeightFunction, zeta_inverse

__all__ = [
    "HypothesisReport",
    "RateFunctions",
    "Thresholds",
    "check_cm_constant",
    "check_stabilization_constant",
    "cm_grid",
    "condition_suprema",
    "hypothesis_report",
    "stabilization_grid",
    "stabilization_tail",
    "thresholds",
]

SUPREMUM_GRID_POINTS = 400
SUPREMUM_GRID_END = 1e4
STABILIZATION_GRID_POINTS = 64
BURSTS_SAMPLED = 50
POINTS_PER_BURST = 32
CONDITION_GRID_END = 1e6
GROWTH_SLOPE = 1e-3


def _log_grid(n: int, end: float) -> NDArray[np.float64]:
    return np.expm1(np.linspace(0.0, math.log1p(end), n))


def stabilization_grid() -> NDArray[np.float64]:
    return _log_grid(STABILIZATION_GRID_POINTS, SUPREMUM_GRID_END)


def cm_grid(op: OscillatingPart | None = None) -> NDArray[np.float64]:
    """Log grid on ``[0, 1e4]`` plus interior points of the first bursts of a train."""
    grid = _log_grid(SUPREMUM_GRID_POINTS, SUPREMUM_GRID_END)
    if isinstance(op, BumpTrain):
        extra = []
        for n in range(1, BURSTS_SAMPLED + 1):
            start, length = op.start(n), op.length(n)
            extra.append(start + length * (np.arange(POINTS_PER_BURST) + 0.5) / POINTS_PER_BURST)
        grid = np.union1d(grid, np.concatenate(extra))
    return grid


def stabilization_tail(c: DissipationCoefficient | OscillatingPart, t: float) -> TailEstimate:
    """``int_t^inf |int_s^inf sigma| ds`` with its error bar."""
    op = c.oscillating if isinstance(c, DissipationCoefficient) else c
    return _stabilization_tail(op, float(t))


def check_stabilization_constant(
    c: DissipationCoefficient, rf: RateFunctions, grid: ArrayLike | None = None
) -> float:
    """``sup Theta(t) (tail(t) + error)``; ``inf`` when the double tail diverges."""
    ts = stabilization_grid() if grid is None else np.asarray(grid, dtype=float)
    best = 0.0
    try:
        for t in ts:
            est = stabilization_tail(c, t)
            best = max(best, float(rf.theta(t)) * (est.value + est.error))
    except HypothesisViolated:
        return math.inf
    return float(best)


def check_cm_constant(
    c: DissipationCoefficient, rf: RateFunctions, grid: ArrayLike | None = None, order: int | None = None
) -> NDArray[np.float64]:
    """``sup |b^(k)| / Xi^{k+1}`` for ``k = 0..order`` (default ``c.m``)."""
    m = c.m if order is None else order
    if m > c.m:
        raise SmoothnessExceeded(f"derivative order {m} exceeds the smoothness m={c.m}")
    ts = cm_grid(c.oscillating) if grid is None else np.asarray(grid, dtype=float)
    sup = np.zeros(m + 1)
    k = np.arange(m + 1)
    for t in ts:
        derivs = np.abs(c.jet(float(t), m).derivatives().real)
        sup = np.maximum(sup, derivs / float(rf.xi(t)) ** (k + 1))
    return sup


def _power_sup(values: NDArray[np.float64], ts: NDArray[np.float64]) -> float:
    """Supremum over the grid, ``inf`` if the log-slope over the last decade exceeds ``GROWTH_SLOPE``."""
    if not np.all(np.isfinite(values)):
        return math.inf
    j = int(np.searchsorted(ts, (1 + ts[-1]) / 10 - 1))
    slope = math.log(values[-1] / values[j]) / math.log((1 + ts[-1]) / (1 + ts[j]))
    return math.inf if slope > GROWTH_SLOPE else float(values.max())


def condition_suprema(
    rf: RateFunctions, m: int, weight: WeightFunction | None = None
) -> tuple[float, float]:
    """Suprema of the two rate conditions on a log grid over ``[0, 1e6]``.

    Unit weight: ``Xi / Theta`` and ``Theta^{-m} int_0^t Xi^{m+1}``.
    Otherwise: ``Xi / zeta^{-1}(Theta)`` and ``Theta / zeta^{-1}(Theta)^{m+1}``.
    """
    ts = _log_grid(SUPREMUM_GRID_POINTS, CONDITION_GRID_END)
    theta = rf.theta(ts)
    xi = rf.xi(ts)
    if weight is None or isinstance(weight, Unit):
        e = 1.0 - rf.beta * (m + 1)
        if abs(e) < 1e-14:
            raise DomainError("beta (m + 1) = 1 is excluded")
        integral = rf.scale ** (m + 1) * ((1.0 + ts) ** e - 1.0) / e
        ass = theta ** (-m) * integral
        ass[0] = ass[1]  # the ratio vanishes at t = 0
        return _power_sup(xi / theta, ts), _power_sup(ass, ts)
    inv = np.array([zeta_inverse(weight, float(y)) for y in theta])
    return _power_sup(xi / inv, ts), _power_sup(theta / inv ** (m + 1), ts)


@dataclass(frozen=True)
class Thresholds:
    beta0: float
    beta0_tilde: float
    p1: float
    p1_tilde: float
    p2: float
    p2_tilde: float


def thresholds(m: int, q: float, r: float, h: float, nu: float, alpha: float | None = None) -> Thresholds:
    """Amplitude and rate thresholds.

    ``beta0`` and ``beta0_tilde`` depend on ``alpha``; by default the sine
    exponent at the unit-weight threshold ``alpha = 1 - q`` is used.
    ``Fraction`` arguments give exact rational results.
    """
    if not nu > 1:
        raise DomainError(f"nu must exceed 1, got {nu}")
    if not q > 1:
        raise DomainError(f"q must exceed 1, got {q}")
    if not r >= 1:
        raise DomainError(f"r must be at least 1, got {r}")
    if m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    # Rational factors keep Fraction inputs exact.
    frac = Fraction(m, m + 1)
    inv = Fraction(1, m + 1)
    a = 1 - q if alpha is None else alpha
    gap = q - (h + 1) / r
    p1 = -1
    p1_tilde = p1 + (q - 1) / nu
    return Thresholds(
        beta0=frac * a + inv,
        beta0_tilde=(frac + 1 / (nu - 1)) * a + inv,
        p1=p1,
        p1_tilde=p1_tilde,
        p2=p1 + frac * gap,
        p2_tilde=p1_tilde + (frac + inv / nu) * gap,
    )


@dataclass(frozen=True)
class HypothesisReport:
    stabilization_constant: float
    cm_constants: NDArray[np.float64]
    xith_supremum: float
    ass_supremum: float
    thresholds: Thresholds
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "stabilization_constant": self.stabilization_constant,
            "cm_constants": [float(x) for x in self.cm_constants],
            "xith_supremum": self.xith_supremum,
            "ass_supremum": self.ass_supremum,
            "thresholds": {k: float(v) for k, v in asdict(self.thresholds).items()},
            "notes": list(self.notes),
        }

    @property
    def holds(self) -> bool:
        vals = [self.stabilization_constant, self.xith_supremum, self.ass_supremum, *self.cm_constants]
        return all(math.isfinite(v) and v >= 0 for v in vals)


def hypothesis_report(
    c: DissipationCoefficient,
    rf: RateFunctions,
    weight: WeightFunction | None = None,
    stabilization_points: ArrayLike | None = None,
) -> HypothesisReport:
    """All checks for one coefficient and one choice of rates."""
    op = c.oscillating
    q = getattr(op, "q", 2.0)
    r = getattr(op, "r", 1.0)
    h = getattr(op, "h", r * q - 1.0)
    nu = weight.nu if isinstance(weight, Gevrey) else math.inf
    th = thresholds(max(c.m, 1), q, r, h, nu if math.isfinite(nu) else 1e300, alpha=rf.alpha)
    xith, ass = condition_suprema(rf, max(c.m, 1), weight)
    return HypothesisReport(
        stabilization_constant=check_stabilization_constant(c, rf, stabilization_points),
        cm_constants=check_cm_constant(c, rf),
        xith_supremum=xith,
        ass_supremum=ass,
        thresholds=th,
    )
