"""Tail integrals of the oscillating part.

For the sine family everything is expressed through

    G_a(X) = int_X^inf u**(a-1) exp(i u) du,

obtained from ``theta = (1 + t)**q``. For large ``X`` the integration-by-parts
series ``G_a(X) = i e^{iX} X**(a-1) sum_k (a-1)(a-2)...(a-k) (i/X)**k`` is
summed to optimal truncation; below ``X_ASYMPTOTIC`` the remaining stretch is
integrated with composite Gauss-Legendre. Burst trains are handled exactly
cell by cell, since every unit cell of the profile has zero mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq

from .coeffs import BumpTrain, OscillatingPart, Sine, Zero
from .errors import HypothesisViolated

X_ASYMPTOTIC = 40.0
_GL20_X, _GL20_W = np.polynomial.legendre.leggauss(20)
_MAX_SERIES_TERMS = 80


def _asymptotic_g(a: float, X: NDArray[np.float64]) -> NDArray[np.complex128]:
    """``G_a(X)`` for ``X >= X_ASYMPTOTIC`` by the optimally truncated series."""
    total = np.ones_like(X, dtype=complex)
    term = np.ones_like(X, dtype=complex)
    active = np.ones(X.shape, dtype=bool)
    prev = np.abs(term)
    for k in range(1, _MAX_SERIES_TERMS):
        term = term * (a - k) * (1j / X)
        mag = np.abs(term)
        active &= (mag < prev) & (mag > 1e-18 * np.abs(total))
        if not active.any():
            break
        total = total + np.where(active, term, 0.0)
        prev = mag
    return 1j * np.exp(1j * X) * X ** (a - 1.0) * total


def _segment_integral(a: float, lo: float, hi: float) -> complex:
    """``int_lo^hi u**(a-1) e^{iu} du`` by panels of length at most one."""
    if hi <= lo:
        return 0.0j
    panels = max(1, int(math.ceil(hi - lo)))
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    u = mid + half * _GL20_X
    return complex(((u ** (a - 1.0) * np.exp(1j * u)) * _GL20_W * half).sum())


def incomplete_oscillatory(a: float, X: ArrayLike) -> NDArray[np.complex128]:
    """``G_a(X) = int_X^inf u**(a-1) e^{iu} du`` for ``a < 1`` and ``X >= 1``."""
    if not a < 1.0:
        raise HypothesisViolated(f"oscillatory tail diverges for exponent a = {a} >= 1")
    X = np.asarray(X, dtype=float)
    flat = X.ravel()
    out = np.empty(flat.shape, dtype=complex)
    big = flat >= X_ASYMPTOTIC
    if big.any():
        out[big] = _asymptotic_g(a, flat[big])
    if (~big).any():
        anchor = complex(_asymptotic_g(a, np.array([X_ASYMPTOTIC]))[0])
        for i in np.flatnonzero(~big):
            out[i] = anchor + _segment_integral(a, float(flat[i]), X_ASYMPTOTIC)
    return out.reshape(X.shape)


def _sine_exponent(op: Sine) -> float:
    return (op.p + 1.0) / op.q


def sigma_tail(op: OscillatingPart, t: ArrayLike) -> NDArray[np.float64]:
    """``int_t^inf sigma``; raises if the improper integral diverges."""
    t = np.asarray(t, dtype=float)
    if isinstance(op, Zero):
        return np.zeros(t.shape)
    if isinstance(op, Sine):
        a = _sine_exponent(op)
        if not a < 1.0:
            raise HypothesisViolated(f"int sigma diverges for p >= q - 1 (p={op.p}, q={op.q})")
        X = (1.0 + t) ** op.q
        return incomplete_oscillatory(a, X).imag / op.q
    if isinstance(op, BumpTrain):
        _require_bump_tail(op)
        flat = t.ravel()
        out = np.zeros(flat.shape)
        for i, ti in enumerate(flat):
            b = op.locate(float(ti))
            if b is not None:
                out[i] = -b.start ** (op.p - op.q + 1.0) * float(op.profile.primitive(b.local))
        return out.reshape(t.shape)
    raise TypeError(f"unsupported oscillating part {op!r}")


def sigma_integral(op: OscillatingPart, t: ArrayLike) -> NDArray[np.float64]:
    """``int_0^t sigma = S(0) - S(t)`` with ``S`` the single tail."""
    return sigma_tail(op, 0.0) - sigma_tail(op, t)


def _require_bump_tail(op: BumpTrain) -> None:
    if op.p - op.q + 1.0 > 0.0:
        raise HypothesisViolated("burst tails grow: need p <= q - 1")


def _bump_series_exponent(op: BumpTrain) -> float:
    return op.r * (op.p - 2.0 * op.q + 2.0) + op.h


def _bump_cell_mean(op: BumpTrain) -> float:
    """``int_0^1 X`` with ``X`` the profile primitive (nonnegative)."""
    half = 0.5
    nodes = half * (_GL20_X + 1.0)
    return float((op.profile.primitive(nodes) * _GL20_W).sum() * half)


def _bump_partial_cell(op: BumpTrain, x: float) -> float:
    """``int_x^1 X`` for ``x`` in ``[0, 1]``."""
    half = 0.5 * (1.0 - x)
    nodes = x + half * (_GL20_X + 1.0)
    return float((op.profile.primitive(nodes) * _GL20_W).sum() * half)


@dataclass(frozen=True)
class TailEstimate:
    """A computed tail integral together with an absolute error bar."""

    value: float
    error: float


def _bump_future_sum(op: BumpTrain, n_next: int, rel_tol: float = 1e-13) -> TailEstimate:
    """``sum_{k >= n_next} N_k t_k**(p - 2q + 2)`` with an integral tail bound."""
    e = _bump_series_exponent(op)
    if not e < -1.0:
        raise HypothesisViolated("double tail of the burst train diverges: need r(p-2q+2)+h < -1")
    total = 0.0
    start = n_next
    block = 4096
    while True:
        k = np.arange(start, start + block, dtype=float)
        counts = np.floor(k**op.h + 1e-12)
        total += float((counts * k ** (op.r * (op.p - 2.0 * op.q + 2.0))).sum())
        end = start + block
        bound = (end - 1.0) ** (e + 1.0) / (-e - 1.0)
        if bound <= rel_tol * max(total, 1e-300) or end > 10**7:
            return TailEstimate(total + 0.5 * bound, 0.5 * bound)
        start = end
        block *= 2


def signed_double_tail(op: OscillatingPart, t: float) -> TailEstimate:
    """``int_t^inf int_s^inf sigma`` without absolute values."""
    if isinstance(op, Zero):
        return TailEstimate(0.0, 0.0)
    if isinstance(op, Sine):
        return _sine_double_tail(op, t)
    if isinstance(op, BumpTrain):
        _require_bump_tail(op)
        mean = _bump_cell_mean(op)
        b = op.locate(t)
        here = 0.0
        if b is not None:
            cells_left = b.count - math.floor(b.tau) - 1 if b.tau < b.count else 0
            scale = b.start ** (op.p - 2.0 * op.q + 2.0)
            here = -scale * (_bump_partial_cell(op, b.local) + max(cells_left, 0) * mean)
            n_next = b.n + 1
        else:
            n_next = max(1, int(math.floor(max(t, 0.0) ** (1.0 / op.r))))
            while op.start(n_next) < t:
                n_next += 1
        fut = _bump_future_sum(op, n_next)
        return TailEstimate(here - mean * fut.value, mean * fut.error)
    raise TypeError(f"unsupported oscillating part {op!r}")


def _falling(a: float, k: int) -> float:
    out = 1.0
    for j in range(1, k + 1):
        out *= a - j
    return out


def _sine_double_tail(op: Sine, t: float) -> TailEstimate:
    """``D(t) = (1/q) Im[G_{a'}(X) - X**(1/q) G_a(X)]`` with ``a' = a + 1/q``.

    Fubini gives ``D(t) = int_t^inf (tau - t) sigma``; the leading terms of the
    two series cancel exactly, so the difference is summed termwise.
    """
    q = op.q
    a = _sine_exponent(op)
    a2 = a + 1.0 / q
    if not a2 < 1.0:
        raise HypothesisViolated(f"double tail diverges for p >= q - 2 (p={op.p}, q={q})")
    X = (1.0 + t) ** q
    if X >= X_ASYMPTOTIC * (1.0 - 1e-12):
        total = 0.0j
        prev = math.inf
        for k in range(1, _MAX_SERIES_TERMS):
            term = (_falling(a2, k) - _falling(a, k)) * (1j / X) ** k
            mag = abs(term)
            if mag >= prev or mag < 1e-18 * max(abs(total), 1e-300):
                break
            total += term
            prev = mag
        val = (1j * np.exp(1j * X) * X ** (a2 - 1.0) * total).imag / q
        return TailEstimate(float(val), 1e-15 * abs(val) + prev * X ** (a2 - 1.0) / q)
    t_anchor = X_ASYMPTOTIC ** (1.0 / q) - 1.0
    anchor = _sine_double_tail(op, t_anchor)
    return TailEstimate(anchor.value + _quad_sigma_tail(op, t, t_anchor), anchor.error + 1e-14)


def _quad_sigma_tail(op: Sine, lo: float, hi: float) -> float:
    """``int_lo^hi S(s) ds`` in the variable ``theta = (1+s)**q``."""
    X0, X1 = (1.0 + lo) ** op.q, (1.0 + hi) ** op.q
    panels = max(4, int(math.ceil(4.0 * (X1 - X0))))
    edges = np.linspace(X0, X1, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    theta = 0.5 * (edges[:-1] + edges[1:])[:, None] + half * _GL20_X
    S = incomplete_oscillatory(_sine_exponent(op), theta).imag / op.q
    jac = theta ** (1.0 / op.q - 1.0) / op.q
    return float((S * jac * _GL20_W * half).sum())


def stabilization_tail(op: OscillatingPart, t: float, near_half_periods: int = 64) -> TailEstimate:
    """``int_t^inf |int_s^inf sigma| ds`` with an absolute error bar.

    Sine: the inner tail is ``|H(theta)| |sin(phi(theta))|`` with a slowly
    varying amplitude. Half periods between consecutive zeros are integrated
    exactly up to a horizon; beyond it ``|sin|`` is replaced by its mean
    ``2/pi``, whose error is controlled by the derivative of the amplitude
    (the boundary terms of the Fourier series of ``|sin|`` vanish at a zero).
    """
    if isinstance(op, Zero):
        return TailEstimate(0.0, 0.0)
    if isinstance(op, Sine):
        return _sine_stabilization(op, t, near_half_periods)
    if isinstance(op, BumpTrain):
        # The cell primitive is nonnegative, so the signed sum is the absolute one.
        d = signed_double_tail(op, t)
        return TailEstimate(abs(d.value), d.error)
    raise TypeError(f"unsupported oscillating part {op!r}")


def _sine_stabilization(op: Sine, t: float, K: int) -> TailEstimate:
    q = op.q
    a = _sine_exponent(op)
    if not a + 1.0 / q < 1.0:
        raise HypothesisViolated(f"double tail diverges for p >= q - 2 (p={op.p}, q={q})")

    def weight(theta):
        return np.asarray(theta, dtype=float) ** (1.0 / q - 1.0) / q**2

    def inner(theta):
        return incomplete_oscillatory(a, theta).imag

    X = (1.0 + t) ** q
    # Near part: locate sign changes of the inner tail on a fine grid.
    hi = max(X, X_ASYMPTOTIC) + K * math.pi
    grid = np.linspace(X, hi, int(math.ceil((hi - X) / 0.05)) + 1)
    vals = inner(grid)
    idx = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    zeros = [X]
    for i in idx:
        zeros.append(brentq(lambda u: float(inner(np.array(u))), grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15))
    last = zeros[-1]
    zeros = np.asarray(zeros)
    near = 0.0
    for lo, up in zip(zeros[:-1], zeros[1:]):
        half = 0.5 * (up - lo)
        th = 0.5 * (lo + up) + half * _GL20_X
        near += float((np.abs(inner(th)) * weight(th) * _GL20_W).sum() * half)

    # Far part: mean of |sin| times the slowly varying amplitude.
    def amplitude(theta):
        theta = np.asarray(theta, dtype=float)
        return np.abs(incomplete_oscillatory(a, theta)) * weight(theta)

    decades = 10.0
    edges = np.logspace(math.log10(last), math.log10(last) + decades, 321)
    half = 0.5 * np.diff(edges)[:, None]
    th = 0.5 * (edges[:-1] + edges[1:])[:, None] + half * _GL20_X
    far = float((amplitude(th) * _GL20_W * half).sum())
    big = edges[-1]
    power = a + 1.0 / q - 2.0
    far += big ** (power + 1.0) / (-(power + 1.0)) / q**2
    far *= 2.0 / math.pi
    # Amplitude slope at the horizon bounds the neglected oscillatory terms.
    eps = 1e-6 * last
    slope = abs(float(amplitude(last + eps) - amplitude(last - eps))) / (2 * eps)
    err = 0.25 * slope + 1e-12 * far + 1e-14 * near
    return TailEstimate(near + far, err)


@dataclass(frozen=True)
class OmegaRange:
    """Bounds ``omega0 <= omega(t) <= omega1`` over ``t >= 0``."""

    omega0: float
    omega1: float


def omega(op: OscillatingPart, t: ArrayLike) -> NDArray[np.float64]:
    """``omega(t) = exp(int_t^inf sigma)``."""
    return np.exp(sigma_tail(op, t))


def omega_range(op: OscillatingPart) -> OmegaRange:
    """Infimum and supremum of ``omega`` with analytic control of the far tail."""
    if isinstance(op, Zero):
        return OmegaRange(1.0, 1.0)
    if isinstance(op, BumpTrain):
        _require_bump_tail(op)
        xs = np.linspace(0.0, 1.0, 4001)
        xmax = float(op.profile.primitive(xs).max())
        # t_n**(p-q+1) is maximal at n = 1 when p <= q - 1.
        return OmegaRange(math.exp(-xmax), 1.0)
    if isinstance(op, Sine):
        a = _sine_exponent(op)
        cut = max(400.0, 2.0 * X_ASYMPTOTIC)
        theta = np.arange(1.0, cut, 0.01)
        s = incomplete_oscillatory(a, theta).imag / op.q
        # Past the cut the inner tail is bounded by |G_a|, which decreases.
        env = float(np.abs(incomplete_oscillatory(a, np.array([cut]))[0])) / op.q
        lo = min(float(s.min()), -env)
        hi = max(float(s.max()), env)
        return OmegaRange(math.exp(lo), math.exp(hi))
    raise TypeError(f"unsupported oscillating part {op!r}")
