"""Radial initial data, weighted norms and total-energy assembly.

Data are given by a radial profile ``g``: ``v0_hat = g / <r>`` and
``v1_hat = g`` with ``<r> = sqrt(1 + r^2)``, so that
``(1 + r^2)|v0_hat|^2 + |v1_hat|^2 = 2 g^2``. The total energy is
``E(t) = int E(t, xi) dxi`` with ``E(t, xi) = |xi|^2 |v|^2 + |v_t|^2``, evaluated
by radial quadrature with the surface factor ``|S^{n-1}| r^{n-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad

from .coeffs import DissipationCoefficient
from .errors import ConfigError, DomainError
from .modes import integrate_modes
from .zones import Gevrey, Log, Unit, WeightFunction, ZonePartition, zeta_inverse

R_MIN = 1e-3
DEFAULT_NODES = 256
TAIL_TOL = 1e-10
_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class Sobolev:
    """``g = (1 + r^2)^{-s/2 - (n+1)/4}``."""

    s: float


@dataclass(frozen=True)
class GevreyExp:
    """``g = exp(-kappa (1 + r)^{1/nu})``."""

    nu: float
    kappa: float

    def __post_init__(self) -> None:
        if not (self.nu > 1.0 and self.kappa > 0.0):
            raise ConfigError("GevreyExp needs nu > 1 and kappa > 0")


@dataclass(frozen=True)
class Bandlimited:
    """Smooth compactly supported ``g = exp(1 - 1 / (1 - (r / r_max)^2))`` on ``[0, r_max)``."""

    r_max: float

    def __post_init__(self) -> None:
        if not self.r_max > 0.0:
            raise ConfigError("Bandlimited needs r_max > 0")


Family = Union[Sobolev, GevreyExp, Bandlimited]


def sphere_area(n: int) -> float:
    """``|S^{n-1}|``, with the convention ``|S^0| = 2`` (both half lines)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class InitialData:
    family: Family
    n: int = 1
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.n}")

    def profile(self, r: ArrayLike) -> NDArray[np.float64]:
        r = np.asarray(r, dtype=float)
        f = self.family
        if isinstance(f, Sobolev):
            g = (1.0 + r * r) ** (-f.s / 2.0 - (self.n + 1) / 4.0)
        elif isinstance(f, GevreyExp):
            g = np.exp(-f.kappa * (1.0 + r) ** (1.0 / f.nu))
        else:
            x = np.clip(r / f.r_max, 0.0, 1.0)
            with np.errstate(divide="ignore", over="ignore"):
                g = np.where(x < 1.0, np.exp(1.0 - 1.0 / (1.0 - x * x)), 0.0)
        return self.amplitude * g

    def v0_hat(self, r: ArrayLike) -> NDArray[np.float64]:
        r = np.asarray(r, dtype=float)
        return self.profile(r) / np.sqrt(1.0 + r * r)

    def v1_hat(self, r: ArrayLike) -> NDArray[np.float64]:
        return self.profile(r)

    def mode_state(self, r: float) -> NDArray[np.complex128]:
        """``V(0) = (i r v0_hat, v1_hat)``."""
        return np.array([1j * r * float(self.v0_hat(r)), float(self.v1_hat(r))], dtype=complex)

    def energy_density(self, r: ArrayLike) -> NDArray[np.float64]:
        r = np.asarray(r, dtype=float)
        return (r * self.v0_hat(r)) ** 2 + self.v1_hat(r) ** 2

    def radial_factor(self, r: ArrayLike) -> NDArray[np.float64]:
        return sphere_area(self.n) * np.asarray(r, dtype=float) ** (self.n - 1)


def _weight_exponent(w: WeightFunction, kappa: float, r: NDArray) -> NDArray:
    if isinstance(w, Unit):
        return np.full(r.shape, 2.0 * kappa)
    return 2.0 * kappa * w.rho(r)


def _norm_divergent(data: InitialData, w: WeightFunction, kappa: float) -> bool:
    """Decide divergence from the leading growth of the integrand."""
    f = data.family
    if isinstance(f, Bandlimited):
        return False
    if isinstance(f, GevreyExp):
        if isinstance(w, Gevrey):
            return w.nu < f.nu or (w.nu == f.nu and kappa >= f.kappa)
        return False
    # Sobolev: integrand ~ r^{n-1} rho-weight r^{-2s-n-1}.
    if isinstance(w, Gevrey):
        return kappa > 0
    power = -2.0 * f.s - 2.0 + (2.0 * kappa if isinstance(w, Log) else 0.0)
    return power >= -1.0


def h_norm(data: InitialData, w: WeightFunction, kappa: float) -> float:
    """``int e^{2 kappa rho(|xi|)} ((1 + |xi|^2)|v0_hat|^2 + |v1_hat|^2) dxi``; ``inf`` if divergent."""
    if kappa < 0:
        raise DomainError("kappa must be nonnegative")
    if data.amplitude == 0.0:
        return 0.0
    if _norm_divergent(data, w, kappa):
        return math.inf

    def integrand(r):
        r = np.asarray(r, dtype=float)
        base = (1.0 + r * r) * data.v0_hat(r) ** 2 + data.v1_hat(r) ** 2
        expo = _weight_exponent(w, kappa, r)
        with np.errstate(over="ignore", under="ignore"):
            return data.radial_factor(r) * np.exp(expo + np.log(np.maximum(base, 1e-300)))

    # Dyadic shells [2^k, 2^{k+1}]; once the shell ratio settles below one the
    # rest is summed as a geometric series.
    total = 0.0
    lo, hi = 0.0, 1.0
    prev, prev_ratio = math.inf, math.nan
    for k in range(400):
        edges = np.linspace(lo, hi, 9)
        half = 0.5 * np.diff(edges)[:, None]
        x = 0.5 * (edges[:-1] + edges[1:])[:, None] + half * _GL16_X
        piece = float((integrand(x) * _GL16_W * half).sum())
        total += piece
        if piece <= 1e-16 * total and piece <= prev:
            return total
        ratio = piece / prev if prev > 0 else math.nan
        if k >= 8 and ratio < 1.0 and abs(ratio - prev_ratio) < 1e-4 * ratio:
            return total + piece * ratio / (1.0 - ratio)
        prev, prev_ratio = piece, ratio
        lo, hi = hi, 2.0 * hi
        if isinstance(data.family, Bandlimited) and lo >= data.family.r_max:
            return total
    return math.inf


def cut_radius(data: InitialData, tol: float = TAIL_TOL) -> float:
    """Smallest ``R`` (to 1%) with ``int_R^inf E(0, r) dS < tol E(0)``."""
    f = data.family
    if isinstance(f, Bandlimited):
        return f.r_max

    def dens(r):
        return float(data.radial_factor(r) * data.energy_density(r))

    total = quad(dens, 0.0, 1.0)[0] + quad(dens, 1.0, np.inf, limit=200)[0]

    def tail(R):
        return quad(dens, R, np.inf, limit=200)[0]

    lo, hi = 1.0, 2.0
    while tail(hi) > tol * total:
        lo, hi = hi, 2.0 * hi
        if hi > 1e8:
            raise DomainError("initial energy decays too slowly for a finite cut radius")
    while hi / lo > 1.01:
        mid = math.sqrt(lo * hi)
        if tail(mid) > tol * total:
            lo = mid
        else:
            hi = mid
    return hi


def radial_grid(
    r_cut: float, nodes: int = DEFAULT_NODES, r_min: float = R_MIN, n: int = 1
) -> tuple[NDArray, NDArray]:
    """Log-spaced nodes with trapezoid weights in ``log r`` (``dr = r du``).

    The ball ``|xi| < r_min`` is lumped into the first node, whose weight gains
    ``int_0^{r_min} r^{n-1} dr / r_min^{n-1} = r_min / n``.
    """
    if not r_cut > r_min:
        raise DomainError("r_cut must exceed r_min")
    u = np.linspace(math.log(r_min), math.log(r_cut), nodes)
    r = np.exp(u)
    du = u[1] - u[0]
    w = np.full(nodes, du)
    w[0] = w[-1] = 0.5 * du
    w = w * r
    w[0] += r_min / n
    return r, w


@dataclass(frozen=True)
class EnergySeries:
    """``E(t)`` with the node-resolved densities used to assemble it."""

    t: NDArray[np.float64]
    energy: NDArray[np.float64]
    E0: float
    radii: NDArray[np.float64]
    weights: NDArray[np.float64]
    density: NDArray[np.float64]  # (nodes, times)
    tail_bound: float
    averaging_error: float = 0.0
    notes: list[str] = field(default_factory=list)


def total_energy(
    data: InitialData,
    c: DissipationCoefficient,
    times: ArrayLike,
    mode_grid: tuple[NDArray, NDArray] | None = None,
    r_cut: float | None = None,
    threads: int | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-14,
    max_phase: float | None = None,
) -> EnergySeries:
    """Integrate one mode per radial node and assemble ``E(t) = sum w_i |S^{n-1}| r_i^{n-1} E(t, r_i)``.

    ``E0 = E(0) + ||u_0||^2``. The tail bound covers the initial energy beyond
    ``r_cut`` and the error of lumping the ball ``|xi| < r_min`` into the first
    node; it is relative to ``E(0)`` and not propagated in time. The averaging
    error weights each mode's relative amplitude bound ``e`` by its initial
    energy share, using ``(1 + e)^2 - 1`` for the energy.
    """
    ts = np.asarray(times, dtype=float)
    if ts[0] != 0.0:
        ts = np.concatenate([[0.0], ts])
    if mode_grid is None:
        r_cut = cut_radius(data) if r_cut is None else r_cut
        mode_grid = radial_grid(r_cut, n=data.n)
    radii, weights = mode_grid
    full_w = weights * data.radial_factor(radii)
    v0s = [data.mode_state(float(r)) for r in radii]
    trajs = integrate_modes(
        c, radii, float(ts[-1]), v0s=v0s, threads=threads, rtol=rtol, atol=atol, samples=ts, max_phase=max_phase
    )
    density = np.array([tr.energy for tr in trajs])
    energy = full_w @ density
    u0_sq = float(full_w @ data.v0_hat(radii) ** 2)
    E0 = float(energy[0]) + u0_sq
    r_lo, r_hi = float(radii[0]), float(radii[-1])

    def dens(r):
        return float(data.radial_factor(r) * data.energy_density(r))

    lumped = float(data.radial_factor(r_lo) * data.energy_density(r_lo)) * r_lo / data.n
    tail = abs(quad(dens, 0.0, r_lo)[0] - lumped)
    if not isinstance(data.family, Bandlimited):
        tail += quad(dens, r_hi, np.inf, limit=200)[0]
    errs = np.array([tr.stats.averaging_error or 0.0 for tr in trajs])
    avg = float(full_w @ (density[:, 0] * ((1.0 + errs) ** 2 - 1.0))) / max(float(energy[0]), 1e-300)
    return EnergySeries(ts, energy, E0, radii, full_w, density, tail / max(float(energy[0]), 1e-300), avg)


def zone_boundaries(zp: ZonePartition, t: float) -> tuple[float, float]:
    """``N mu(t) / mu0`` and ``N zeta^{-1}(Theta(t))``."""
    low = zp.N * float(zp.principal.mu(t)) / zp.principal.mu0
    high = zp.N * zeta_inverse(zp.weight, float(zp.theta.theta(t)))
    return low, high


def zone_split(series: EnergySeries, zp: ZonePartition, t_index: int) -> tuple[float, float, float, float]:
    """``I_1..I_4`` at ``series.t[t_index]``: energy in the four frequency bands.

    Since ``N mu(t)/mu0 <= N <= N zeta^{-1}(Theta(t))`` the bands partition the
    grid; nodes on a boundary go to the lower band.
    """
    t = float(series.t[t_index])
    low, high = zone_boundaries(zp, t)
    r = series.radii
    dens = series.weights * series.density[:, t_index]
    bands = [r <= low, (r > low) & (r <= zp.N), (r > zp.N) & (r <= high), r > high]
    return tuple(float(dens[b].sum()) for b in bands)


def energy_zone_split(
    data: InitialData, c: DissipationCoefficient, zp: ZonePartition, t: float, **kwargs
) -> tuple[float, float, float, float]:
    """Convenience wrapper computing ``E`` up to ``t`` first."""
    series = total_energy(data, c, [t], **kwargs)
    return zone_split(series, zp, len(series.t) - 1)
