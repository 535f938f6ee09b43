"""Decay exponents and boundedness of the normalized energy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import linregress

from .coeffs import DissipationCoefficient
from .errors import DomainError
from .spectral import InitialData, h_norm
from .zones import WeightFunction

MIN_SAMPLES = 20
TREND_BLOCKS = 4
KAPPA_EXPONENTS = tuple(range(-10, 7))


def upper_envelope(values: ArrayLike) -> NDArray[np.float64]:
    """``max_{s >= t} E(s)``: the smallest nonincreasing majorant sampled on the grid."""
    v = np.asarray(values, dtype=float)
    return np.maximum.accumulate(v[::-1])[::-1]


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float
    samples: int


def fit_exponent(
    times: ArrayLike, energies: ArrayLike, window: tuple[float, float] = (1e2, 1e4)
) -> ExponentFit:
    """Least-squares slope of ``log E`` against ``log(1 + t)`` on the envelope inside ``window``."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    if np.any(e <= 0):
        raise DomainError("energies must be positive")
    env = upper_envelope(e)
    sel = (t >= window[0]) & (t <= window[1])
    if sel.sum() < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples in the window, got {int(sel.sum())}")
    x = np.log1p(t[sel])
    y = np.log(env[sel])
    if np.ptp(y) == 0.0:
        return ExponentFit(0.0, 0.0, int(sel.sum()))
    fit = linregress(x, y)
    return ExponentFit(float(fit.slope), float(fit.stderr), int(sel.sum()))


@dataclass(frozen=True)
class BoundednessReport:
    sup_ratio: float
    trend: float
    ratio: NDArray[np.float64]


def boundedness_report(
    times: ArrayLike, energies: ArrayLike, c: DissipationCoefficient, E0: float, start: float = 0.0
) -> BoundednessReport:
    """``sup E(t) exp(int_0^t mu) / E0`` over ``t >= start`` and the trend of its block maxima on the final decade."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    ratio = e * np.exp(c.principal.integral(t)) / E0
    sel = t >= start
    sup = float(ratio[sel].max())
    t_end = float(t[-1])
    last = np.flatnonzero(t >= (1.0 + t_end) / 10.0 - 1.0)
    # Maxima of log-equal blocks: flat for a bounded oscillation, exact for power-law growth.
    blocks = [b for b in np.array_split(last, TREND_BLOCKS) if b.size]
    peaks = [b[np.argmax(ratio[b])] for b in blocks]
    trend = 0.0
    if len(peaks) >= 2 and np.ptp(ratio[peaks]) > 0.0:
        trend = float(linregress(np.log1p(t[peaks]), np.log(ratio[peaks])).slope)
    return BoundednessReport(sup if math.isfinite(sup) else math.inf, trend, ratio)


@dataclass(frozen=True)
class KappaScan:
    """Sup of the bound ratio against the weighted norm for each scanned ``kappa``."""

    kappas: tuple[float, ...]
    sup_ratios: tuple[float, ...]
    cap: float
    kappa0: float | None

    def to_dict(self) -> dict:
        return {
            "cap": self.cap,
            "kappa0": self.kappa0,
            "scan": [{"kappa": k, "sup_ratio": s} for k, s in zip(self.kappas, self.sup_ratios)],
        }


def kappa0_scan(
    times: ArrayLike,
    energies: ArrayLike,
    c: DissipationCoefficient,
    data: InitialData,
    weight: WeightFunction,
    cap: float = 1.0,
    start: float = 0.0,
) -> KappaScan:
    """Smallest ``kappa`` in ``{0} U {2^-10, ..., 2^6}`` whose sup bound ratio is at most ``cap``.

    The reference energy is the weighted norm at ``kappa``; the scan stops at
    the first ``kappa`` for which the data leave the weighted space.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    sel = t >= start
    base = e[sel] * np.exp(c.principal.integral(t[sel]))
    kappas, sups = [], []
    kappa0 = None
    for kappa in (0.0, *(2.0**j for j in KAPPA_EXPONENTS)):
        norm = h_norm(data, weight, kappa)
        if not math.isfinite(norm):
            break
        sup = float(base.max() / norm) if norm > 0 else math.inf
        kappas.append(kappa)
        sups.append(sup)
        if kappa0 is None and sup <= cap:
            kappa0 = kappa
    return KappaScan(tuple(kappas), tuple(sups), cap, kappa0)
