"""Fourier-mode integration of ``d/dt V = A(t, |xi|) V``.

``V = (i|xi| v, v_t)`` and the energy density is ``|V|^2``. Integration uses
an adaptive Dormand-Prince 5(4) pair whose step is capped at a fixed fraction
of the fastest period present (frequency, oscillation of the damping, or one).

When the damping oscillates too fast to resolve on the requested horizon the
integrator can switch to the frame ``V = diag(1, omega) W`` with
``omega(t) = exp(int_t^inf sigma)``. In that frame the oscillating part only
appears through ``omega - 1``, which is small and oscillatory; it is averaged
out and a first-order bound for the neglected remainder is reported.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid

from . import _kernel
from .coeffs import DissipationCoefficient, Sine
from .errors import BlowupError, DomainError, NumericalFailure, StiffnessError
from .tails import incomplete_oscillatory, omega, omega_range, sigma_integral, signed_double_tail

DEFAULT_SAMPLES = 512
C_STEP = 0.2
H_MIN = 1e-14
MAX_STEPS = 2_000_000_000


@dataclass(frozen=True)
class ModeState:
    """State ``(i|xi| v, v_t)`` of one mode at time ``t``."""

    xi_norm: float
    v_scaled: complex
    v_t: complex
    t: float = 0.0

    @property
    def energy_density(self) -> float:
        return abs(self.v_scaled) ** 2 + abs(self.v_t) ** 2

    @property
    def vector(self) -> NDArray[np.complex128]:
        return np.array([self.v_scaled, self.v_t], dtype=complex)


@dataclass(frozen=True)
class IntegratorStats:
    steps: int
    rejected: int
    rtol: float
    atol: float
    switch_time: float | None = None
    averaging_error: float = 0.0


@dataclass(frozen=True)
class ModeTrajectory:
    """Sampled states, energy density and accumulated dissipation of one mode.

    ``dissipation[k]`` is ``int_0^{t_k} 2 b |v_t|^2``; it is only tracked while
    the oscillation is resolved and is ``nan`` in the averaged frame.
    """

    xi_norm: float
    t: NDArray[np.float64]
    V: NDArray[np.complex128]
    energy: NDArray[np.float64]
    dissipation: NDArray[np.float64]
    stats: IntegratorStats = field(compare=False)

    def state(self, k: int) -> ModeState:
        return ModeState(self.xi_norm, complex(self.V[k, 0]), complex(self.V[k, 1]), float(self.t[k]))


def assemble_A(c: DissipationCoefficient, t: float, xi_norm: float) -> NDArray[np.complex128]:
    """System matrix ``[[0, i|xi|], [i|xi|, -b(t)]]``."""
    b = float(c.b(t))
    return np.array([[0.0, 1j * xi_norm], [1j * xi_norm, -b]], dtype=complex)


def log_time_grid(t_end: float, n: int = DEFAULT_SAMPLES) -> NDArray[np.float64]:
    """``n`` times from 0 to ``t_end`` equally spaced in ``log(1 + t)``."""
    if n < 2:
        raise DomainError("a sample grid needs at least two points")
    g = np.expm1(np.linspace(0.0, math.log1p(t_end), n))
    g[0], g[-1] = 0.0, t_end
    return g


def switch_time(c: DissipationCoefficient, t_end: float, max_phase: float | None) -> float | None:
    """Start of the averaged frame, or ``None`` if the oscillation is resolved throughout.

    Only the sine family is averaged; ``max_phase`` caps the oscillation phase
    ``(1 + t)**q`` followed by the resolved integration.
    """
    op = c.oscillating
    if max_phase is None or not isinstance(op, Sine):
        return None
    ts = max_phase ** (1.0 / op.q) - 1.0
    return ts if 0.0 < ts < t_end else None


def _run(xi, y0, t0, samples, rtol, atol, params, mode):
    out, status, steps, rejected, t_reached = _kernel.integrate(
        float(xi), y0, float(t0), samples, float(rtol), float(atol), params, mode,
        C_STEP, H_MIN, MAX_STEPS,
    )
    if status == _kernel.STATUS_STIFF:
        raise StiffnessError(f"step size underflow at t={t_reached:.6g} for |xi|={xi}")
    if status == _kernel.STATUS_BLOWUP:
        raise BlowupError(f"non-finite state at t={t_reached:.6g} for |xi|={xi}")
    if status != _kernel.STATUS_OK:
        raise NumericalFailure(f"step budget exhausted at t={t_reached:.6g} for |xi|={xi}")
    return out, steps, rejected


def _initial(v0: ModeState | Sequence[complex] | None, xi: float) -> NDArray[np.complex128]:
    if v0 is None:
        return np.array([1j * xi, 0.0], dtype=complex) if xi > 0 else np.array([0.0, 1.0], dtype=complex)
    if isinstance(v0, ModeState):
        return v0.vector
    return np.asarray(v0, dtype=complex)


def integrate_mode(
    c: DissipationCoefficient,
    xi_norm: float,
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-14,
    v0: ModeState | Sequence[complex] | None = None,
    samples: ArrayLike | None = None,
    max_phase: float | None = None,
) -> ModeTrajectory:
    """Integrate one mode from ``t = 0`` to ``t_end``.

    ``v0`` defaults to ``(i|xi|, 0)``, i.e. ``v(0) = 1``, ``v_t(0) = 0``.
    ``samples`` defaults to a 512-point log grid. ``max_phase`` enables the
    averaged frame once the oscillation phase of the damping exceeds it.
    """
    if xi_norm < 0 or t_end <= 0 or t_end > 1e6:
        raise DomainError("need |xi| >= 0 and 0 < t_end <= 1e6")
    ts = np.asarray(log_time_grid(t_end) if samples is None else samples, dtype=float)
    if ts[0] != 0.0:
        ts = np.concatenate([[0.0], ts])
    if np.any(np.diff(ts) <= 0) or ts[-1] > t_end * (1 + 1e-12):
        raise DomainError("sample times must increase strictly within [0, t_end]")
    V0 = _initial(v0, xi_norm)
    if xi_norm == 0.0:
        return _zero_frequency(c, V0, ts, rtol, atol)

    params = c.kernel_params()
    tsw = switch_time(c, t_end, max_phase)
    y0 = np.array([V0[0], V0[1], 0.0], dtype=complex)
    if tsw is None:
        out, steps, rejected = _run(xi_norm, y0, 0.0, ts, rtol, atol, params, _kernel.MODE_RESOLVED)
        V = out[:, :2].copy()
        diss = out[:, 2].real.copy()
        stats = IntegratorStats(steps, rejected, rtol, atol)
    else:
        first = ts[ts < tsw]
        head = np.concatenate([first, [tsw]])
        out1, s1, r1 = _run(xi_norm, y0, 0.0, head, rtol, atol, params, _kernel.MODE_RESOLVED)
        w_sw = float(omega(c.oscillating, tsw))
        y1 = np.array([out1[-1, 0], out1[-1, 1] / w_sw, 0.0], dtype=complex)
        rest = ts[ts >= tsw]
        out2, s2, r2 = _run(xi_norm, y1, tsw, rest, rtol, atol, params, _kernel.MODE_AVERAGED)
        W = out2[:, :2].copy()
        W[:, 1] *= omega(c.oscillating, rest)
        V = np.concatenate([out1[:-1, :2], W])
        diss = np.concatenate([out1[:-1, 2].real, np.full(rest.size, np.nan)])
        err = averaging_error(c, xi_norm, tsw, t_end)
        stats = IntegratorStats(s1 + s2, r1 + r2, rtol, atol, tsw, err)
    energy = np.abs(V[:, 0]) ** 2 + np.abs(V[:, 1]) ** 2
    return ModeTrajectory(float(xi_norm), ts, V, energy, diss, stats)


def _zero_frequency(c, V0, ts, rtol, atol) -> ModeTrajectory:
    """``|xi| = 0``: ``v_t(t) = v_t(0) exp(-int_0^t b)`` and ``i|xi| v = 0``."""
    eta = np.exp(-(c.principal.integral(ts) + sigma_integral(c.oscillating, ts)))
    V = np.zeros((ts.size, 2), dtype=complex)
    V[:, 1] = V0[1] * eta
    energy = np.abs(V[:, 1]) ** 2
    # The whole loss is dissipated: E(0) - E(t).
    diss = energy[0] - energy
    return ModeTrajectory(0.0, ts, V, energy, diss, IntegratorStats(0, 0, rtol, atol))


def averaging_error(c: DissipationCoefficient, xi_norm: float, t_switch: float, t_end: float) -> float:
    """First-order bound for the relative amplitude error of the averaged frame.

    With ``P = i|xi| [[0, omega - 1], [1/omega - 1, 0]]`` and ``Q`` its primitive
    vanishing at infinity, one integration by parts in the Duhamel formula gives
    ``|W - Y| <= (|Q(t)| + |Q(T)| + int_T^t (2 |A_avg| |Q| + |Q| |P|)) sup |W|``,
    where ``|d/dt int (omega - 1)|`` is split into the signed double tail of
    ``sigma`` and a quadratic remainder.
    """
    op = c.oscillating
    if not isinstance(op, Sine):
        return 0.0
    rng = omega_range(op)
    s = np.geomspace(1.0 + t_switch, 1.0 + t_end, 400) - 1.0
    a = (op.p + 1.0) / op.q
    env = np.abs(incomplete_oscillatory(a, (1.0 + s) ** op.q)) / op.q
    growth = math.exp(max(abs(math.log(rng.omega0)), abs(math.log(rng.omega1))))
    # int_s^inf env^2 with env ~ (1+s)**(p-q+1)/q.
    decay = 2.0 * (op.p - op.q + 1.0) + 1.0
    quad_tail = growth * env**2 * (1.0 + s) / max(-decay, 1e-12)
    D = np.array([abs(signed_double_tail(op, float(si)).value) for si in s])
    d_plus = D + 0.5 * quad_tail
    d_minus = D + 0.5 * quad_tail
    Qn = xi_norm * np.hypot(d_plus, d_minus)
    Pn = xi_norm * growth * 2.0 * env
    An = np.hypot(xi_norm * math.sqrt(2.0), c.principal.mu0 / (1.0 + s))
    integrand = Qn * (2.0 * An + Pn)
    return float(Qn[0] + Qn.max() + trapezoid(integrand, s))


def integrate_modes(
    c: DissipationCoefficient,
    xis: Sequence[float],
    t_end: float,
    v0s: Sequence[Sequence[complex]] | None = None,
    threads: int | None = None,
    **kwargs,
) -> list[ModeTrajectory]:
    """Integrate several modes, in parallel when ``threads > 1``; order is preserved."""
    threads = resolve_threads(threads)
    v0s = [None] * len(xis) if v0s is None else list(v0s)

    def one(i: int) -> ModeTrajectory:
        return integrate_mode(c, float(xis[i]), t_end, v0=v0s[i], **kwargs)

    if threads <= 1:
        return [one(i) for i in range(len(xis))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(len(xis))))


def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("OSCIWAVE_THREADS")
    return max(1, int(env)) if env else 1


def energy_identity_residual(traj: ModeTrajectory, c: DissipationCoefficient | None = None) -> float:
    """``max_k |E_k - E_{k-1} + int_{t_{k-1}}^{t_k} 2 b |v_t|^2| / E_0`` over resolved samples.

    The dissipation integral is accumulated by the integrator alongside the
    state, i.e. with the same stages as the solution itself.
    """
    if traj.t.size < 2:
        raise DomainError("empty trajectory")
    ok = np.isfinite(traj.dissipation)
    E = traj.energy[ok]
    Q = traj.dissipation[ok]
    if E.size < 2:
        raise DomainError("no resolved samples")
    return float(np.max(np.abs(np.diff(E) + np.diff(Q))) / traj.energy[0])


def fundamental_matrix(
    c: DissipationCoefficient,
    xi_norm: float,
    times: ArrayLike,
    rtol: float = 1e-12,
    atol: float = 1e-15,
    max_phase: float | None = None,
) -> NDArray[np.complex128]:
    """Fundamental matrix ``Phi(t)`` with ``V(t) = Phi(t) V(0)`` at each of ``times``."""
    ts = np.asarray(times, dtype=float)
    samples = ts if ts[0] == 0.0 else np.concatenate([[0.0], ts])
    skip = 0 if ts[0] == 0.0 else 1
    out = np.empty((ts.size, 2, 2), dtype=complex)
    for col in range(2):
        e = np.zeros(2, dtype=complex)
        e[col] = 1.0
        traj = integrate_mode(
            c, xi_norm, float(samples[-1]), rtol, atol, v0=e, samples=samples, max_phase=max_phase
        )
        out[:, :, col] = traj.V[skip:]
    return out
