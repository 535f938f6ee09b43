"""Refined diagonalization in the hyperbolic zone and the intermediate-zone transform.

Each level of the hierarchy is a matrix ``[[phi, conj r], [r, conj phi]]``.
One step diagonalizes it with ``M = [[1, conj d], [d, 1]]`` and absorbs
``M^{-1} dM/dt`` into the next level. Derivatives are carried by jets, so the
level-``k`` quantities need ``k`` derivatives of the coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp

from .coeffs import BumpTrain, DissipationCoefficient, Sine, Zero
from .errors import DomainError, HierarchyBreakdown, HypothesisViolated, SmoothnessExceeded
from .modes import integrate_mode
from .taylor import Jet, JetOrderMismatch, jet_exp, jet_sqrt
from .tails import omega_range, sigma_tail, stabilization_tail
from .zones import Unit, Zone, ZonePartition, zeta_inverse

MAX_LEVEL = 6
MAX_N = 2**16
BASE_MATRIX = np.array([[1.0, -1.0], [1.0, 1.0]], dtype=complex)
DEFAULT_MAX_PHASE = 2e4
_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


def frobenius(a: NDArray) -> NDArray[np.float64]:
    """Frobenius norm over the last two axes."""
    return np.sqrt((np.abs(a) ** 2).sum(axis=(-2, -1)))


def level_matrix(phi: complex, r: complex) -> NDArray[np.complex128]:
    return np.array([[phi, np.conj(r)], [r, np.conj(phi)]], dtype=complex)


def diagonalizer_matrix(delta: complex) -> NDArray[np.complex128]:
    return np.array([[1.0, np.conj(delta)], [delta, 1.0]], dtype=complex)


@dataclass(frozen=True)
class Diagonalizer:
    delta: Jet
    lam: Jet


def diagonalize(phi: Jet, r: Jet) -> Diagonalizer:
    """``d = -i r / Im phi (1 + s)^{-1}`` and ``lambda = Re phi + i Im phi s``
    with ``s = sqrt(1 - |r|^2 / (Im phi)^2)``."""
    if phi.order != r.order:
        raise JetOrderMismatch(f"phi has order {phi.order}, r has order {r.order}")
    phi_im = phi.imag
    if not abs(r.value) < abs(phi_im.value):
        raise HierarchyBreakdown(f"|r| = {abs(r.value):.3g} >= |Im phi| = {abs(phi_im.value):.3g}")
    r_sq = (r * r.conj()).real
    s = jet_sqrt(1.0 - r_sq / (phi_im * phi_im))
    delta = (r * -1j) / phi_im / (1.0 + s)
    lam = phi.real + phi_im * s * 1j
    return Diagonalizer(delta, lam)


@dataclass(frozen=True)
class StepResult:
    delta: Jet
    lam: Jet
    next_phi: Jet
    next_r: Jet


def rd_step(phi: Jet, r: Jet) -> StepResult:
    """One diagonalization step; the next level has one order less.

    ``r' = -d'/(1 - |d|^2)`` and
    ``phi' = lambda - (1/2) d/dt log(1 - |d|^2) - i Im(conj(d) d') / (1 - |d|^2)``.
    """
    if phi.order == 0 or r.order == 0:
        raise SmoothnessExceeded("a diagonalization step needs jets of order >= 1")
    dz = diagonalize(phi, r)
    delta, lam = dz.delta, dz.lam
    d_delta = delta.shift()
    low = d_delta.order
    delta_low = delta.truncate(low)
    q = (1.0 - delta * delta.conj()).real
    q_low = q.truncate(low)
    next_r = -d_delta / q_low
    next_phi = lam.truncate(low) - 0.5 * q.shift() / q_low - (delta_low.conj() * d_delta).imag * 1j / q_low
    return StepResult(delta, lam, next_phi, next_r)


def rd_residual(phi: complex, r: complex) -> float:
    """``|| M^{-1} A M - diag(lambda, conj lambda) ||`` at a point."""
    dz = diagonalize(Jet.constant(phi, 0), Jet.constant(r, 0))
    M = diagonalizer_matrix(dz.delta.value)
    A = level_matrix(phi, r)
    D = np.diag([dz.lam.value, np.conj(dz.lam.value)])
    return float(frobenius(np.linalg.solve(M, A @ M) - D))


@dataclass(frozen=True)
class DiagLevel:
    """Level ``k``: ``phi_k``, ``r_k`` and, where admissible, ``delta_k`` and ``lambda_k``."""

    k: int
    phi: Jet
    r: Jet
    delta: Jet | None
    lam: Jet | None

    @property
    def matrix(self) -> NDArray[np.complex128]:
        return level_matrix(self.phi.value, self.r.value)

    @property
    def diagonalizer(self) -> NDArray[np.complex128]:
        if self.delta is None:
            raise HierarchyBreakdown(f"level {self.k} is not diagonalizable")
        return diagonalizer_matrix(self.delta.value)


def build_hierarchy(
    c: DissipationCoefficient, t: float, xi_norm: float, m: int, zp: ZonePartition | None = None
) -> list[DiagLevel]:
    """Levels ``0..m`` at ``(t, |xi|)`` from ``phi_0 = i|xi| - b/2``, ``r_0 = -b/2``."""
    if m > MAX_LEVEL:
        raise DomainError(f"levels beyond {MAX_LEVEL} are not supported")
    if m > c.m:
        raise SmoothnessExceeded(f"level {m} needs {m} derivatives, coefficient has m={c.m}")
    if zp is not None and zp.classify(t, xi_norm) is not Zone.HYPERBOLIC:
        raise DomainError(f"(t={t}, |xi|={xi_norm}) is not in the hyperbolic zone")
    b = c.jet(float(t), m)
    phi = 1j * xi_norm - 0.5 * b
    r = -0.5 * b
    levels = []
    for k in range(m):
        step = rd_step(phi, r)
        levels.append(DiagLevel(k, phi, r, step.delta, step.lam))
        phi, r = step.next_phi, step.next_r
    try:
        dz = diagonalize(phi, r)
        levels.append(DiagLevel(m, phi, r, dz.delta, dz.lam))
    except HierarchyBreakdown:
        levels.append(DiagLevel(m, phi, r, None, None))
    return levels


def phi_real_residual(c: DissipationCoefficient, levels: list[DiagLevel]) -> float:
    """``Re phi_m + b/2 + (1/2) d/dt log prod (1 - |delta_k|^2)`` at the base point."""
    m = levels[-1].k
    b = levels[0].r.value.real * -2.0
    acc = levels[-1].phi.value.real + 0.5 * b
    for lv in levels[:m]:
        q = (1.0 - lv.delta * lv.delta.conj()).real
        acc += 0.5 * (q.shift().value / q.value).real
    return abs(acc)


def transform_matrix(levels: list[DiagLevel], m: int) -> NDArray[np.complex128]:
    """``M M_0 ... M_{m-1}``, mapping level-``m`` coordinates back to ``V``."""
    T = BASE_MATRIX.copy()
    for lv in levels[:m]:
        T = T @ lv.diagonalizer
    return T


# Hyperbolic-zone scans.


def hyperbolic_grid(zp: ZonePartition, n_t: int, n_xi: int, span: float) -> list[tuple[float, float]]:
    pts = []
    for xi in zp.N * np.logspace(0.0, math.log10(span), n_xi):
        t_h = zp.t_hyperbolic(float(xi))
        for t in np.linspace(0.0, t_h, n_t):
            pts.append((float(t), float(xi)))
    return pts


@dataclass(frozen=True)
class SymbolScan:
    """Suprema of ``|r_k| |xi|^k / Xi^{k+1}`` and ``|delta_k| |xi|^{k+1} / Xi^{k+1}``."""

    N: float
    r_sup: NDArray[np.float64]
    delta_sup: NDArray[np.float64]
    delta_max: NDArray[np.float64]
    N0: float
    points: int


def _scan(c, zp, m, pts):
    r_sup = np.zeros(m + 1)
    d_sup = np.zeros(m + 1)
    d_max = np.zeros(m + 1)
    k = np.arange(m + 1)
    for t, xi in pts:
        try:
            levels = build_hierarchy(c, t, xi, m)
        except HierarchyBreakdown:
            return None
        Xi = float(zp.theta.xi(t))
        r_abs = np.array([abs(lv.r.value) for lv in levels])
        d_abs = np.array([abs(lv.delta.value) if lv.delta is not None else math.inf for lv in levels])
        r_sup = np.maximum(r_sup, r_abs * xi**k / Xi ** (k + 1))
        d_sup = np.maximum(d_sup, d_abs * xi ** (k + 1) / Xi ** (k + 1))
        d_max = np.maximum(d_max, d_abs)
    return r_sup, d_sup, d_max


def find_n0(c: DissipationCoefficient, zp: ZonePartition, m: int, n_t: int = 64, n_xi: int = 64, span: float = 64.0) -> float:
    """Smallest ``N = 2^j <= 2^16`` with every ``|delta_k| <= 1/2`` on the hyperbolic grid."""
    N = 1.0
    while N <= MAX_N:
        zn = ZonePartition(N, zp.principal, zp.theta, zp.weight)
        res = _scan(c, zn, m, hyperbolic_grid(zn, n_t, n_xi, span))
        if res is not None and np.all(res[2][:m] <= 0.5):
            return N
        N *= 2.0
    return math.inf


def symbol_scan(
    c: DissipationCoefficient, zp: ZonePartition, m: int, n_t: int = 64, n_xi: int = 64, span: float = 64.0
) -> SymbolScan:
    """Scan a ``n_t x n_xi`` grid of the hyperbolic zone; ``inf`` entries signal breakdown."""
    pts = hyperbolic_grid(zp, n_t, n_xi, span)
    res = _scan(c, zp, m, pts)
    n0 = find_n0(c, zp, m, n_t, n_xi, span)
    if res is None:
        inf = np.full(m + 1, math.inf)
        return SymbolScan(zp.N, inf, inf, inf, n0, len(pts))
    return SymbolScan(zp.N, res[0], res[1], res[2], n0, len(pts))


def symbol_slopes(
    c: DissipationCoefficient, zp: ZonePartition, m: int, t: float, n: int = 16, span: float = 64.0
) -> NDArray[np.float64]:
    """Log-log slopes of ``|r_k|`` in ``|xi|`` at fixed ``t`` over ``[xi_min, span xi_min]``."""
    xi_min = zp.N * zeta_inverse(zp.weight, float(zp.theta.theta(t)))
    xis = xi_min * np.logspace(0.0, math.log10(span), n)
    logs = np.array([[math.log(abs(lv.r.value)) for lv in build_hierarchy(c, t, float(x), m)] for x in xis])
    return np.array([np.polyfit(np.log(xis), logs[:, k], 1)[0] for k in range(m + 1)])


@dataclass(frozen=True)
class DiagonalizedTrajectory:
    """Level-``m`` trajectory with the back-mapped energy and a direct comparison."""

    xi_norm: float
    m: int
    t: NDArray[np.float64]
    Vm: NDArray[np.complex128]
    level_energy: NDArray[np.float64]
    energy: NDArray[np.float64]
    direct_energy: NDArray[np.float64]
    exited: bool

    @property
    def back_map_error(self) -> float:
        return float(np.max(np.abs(self.energy - self.direct_energy) / self.direct_energy[0]))

    @property
    def norm_ratio(self) -> tuple[float, float]:
        ratio = self.level_energy / self.direct_energy
        return float(ratio.min()), float(ratio.max())


def _level_system(c, xi, m):
    def rhs(t, y):
        lv = build_hierarchy(c, t, xi, m)[m]
        return level_matrix(lv.phi.value, lv.r.value) @ y

    return rhs


def integrate_diagonalized(
    c: DissipationCoefficient,
    zp: ZonePartition,
    xi_norm: float,
    m: int,
    t_end: float,
    samples: int = 65,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    v0: ArrayLike | None = None,
) -> DiagonalizedTrajectory:
    """Integrate ``V_m' = A_m V_m`` and map back with ``V = M M_0 ... M_{m-1} V_m``.

    The path is cut at ``t_H(|xi|)`` when ``t_end`` leaves the hyperbolic zone.
    """
    t_h = zp.t_hyperbolic(xi_norm)
    if t_h is None:
        raise DomainError(f"|xi|={xi_norm} < N has no hyperbolic part")
    exited = t_end > t_h
    t_stop = min(t_end, t_h)
    if t_stop <= 0.0:
        raise DomainError("the hyperbolic part of this mode has zero length")
    ts = np.linspace(0.0, t_stop, samples)
    V0 = np.array([1j * xi_norm, 0.0] if v0 is None else v0, dtype=complex)
    T0 = transform_matrix(build_hierarchy(c, 0.0, xi_norm, m), m)
    sol = solve_ivp(
        _level_system(c, xi_norm, m), (0.0, t_stop), np.linalg.solve(T0, V0), method="RK45",
        t_eval=ts, rtol=rtol, atol=atol,
    )
    if not sol.success:
        raise HierarchyBreakdown(sol.message)
    Vm = sol.y.T
    energy = np.empty(ts.size)
    for i, t in enumerate(ts):
        V = transform_matrix(build_hierarchy(c, float(t), xi_norm, m), m) @ Vm[i]
        energy[i] = float(np.sum(np.abs(V) ** 2))
    direct = integrate_mode(c, xi_norm, t_stop, rtol=1e-12, atol=1e-15, v0=V0, samples=ts)
    return DiagonalizedTrajectory(
        xi_norm, m, ts, Vm, np.sum(np.abs(Vm) ** 2, axis=1), energy, direct.energy, exited
    )


def _rate(op, t):
    return float(op.oscillation_rate(t)) if not isinstance(op, Zero) else 0.0


def _panels(c, lo: float, hi: float, per_radian: float = 1.0, base: int = 16) -> NDArray[np.float64]:
    edges = np.expm1(np.linspace(math.log1p(lo), math.log1p(hi), base + 1))
    out = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(1, int(math.ceil(_rate(c.oscillating, b) * (b - a) * per_radian)))
        out.extend(np.linspace(a, b, k + 1)[1:])
    return np.asarray(out)


def gronwall_budget(c: DissipationCoefficient, zp: ZonePartition, xi_norm: float, m: int) -> float:
    """``int_0^{t_H} 2 |r_m| dt / varrho(|xi|)``, the measured constant kappa_0."""
    t_h = zp.t_hyperbolic(xi_norm)
    if t_h is None:
        raise DomainError(f"|xi|={xi_norm} < N has no hyperbolic part")
    varrho = 1.0 if isinstance(zp.weight, Unit) else float(zp.weight.rho(xi_norm))
    if t_h == 0.0:
        return 0.0
    edges = _panels(c, 0.0, t_h)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        for x, w in zip(_GL8_X, _GL8_W):
            t = 0.5 * (a + b) + half * x
            total += w * half * 2.0 * abs(build_hierarchy(c, t, xi_norm, m)[m].r.value)
    return total / varrho


# Intermediate zone.


def _omega_jet(c: DissipationCoefficient, t: float, order: int = 1) -> Jet:
    """``omega(t + s) = omega(t) exp(-int_t^{t+s} sigma)``."""
    w = float(np.exp(sigma_tail(c.oscillating, t)))
    sig = c.oscillating.jet(t, order - 1).coeffs
    prim = np.zeros(order + 1, dtype=complex)
    prim[1:] = sig / np.arange(1, order + 1)
    return jet_exp(Jet(-prim)) * w


def _tilde_delta(mu: Jet, xi_norm: float) -> Jet:
    a = mu / (2.0 * xi_norm)
    return a * 1j / (1.0 + jet_sqrt(1.0 - a * a))


@dataclass(frozen=True)
class InterZoneTransform:
    t: float
    xi_norm: float
    omega: float
    M1: NDArray[np.complex128]
    M: NDArray[np.complex128]
    M2: NDArray[np.complex128]
    lam: complex
    Lam: NDArray[np.complex128]
    R: NDArray[np.complex128]
    A: NDArray[np.complex128]
    dM_total: NDArray[np.complex128]
    delta: complex

    @property
    def M_total(self) -> NDArray[np.complex128]:
        return self.M1 @ self.M @ self.M2

    def defect(self) -> float:
        """``|| R - (Mt^{-1} A Mt - Lam - Mt^{-1} dMt/dt) ||`` with ``Mt = M1 M M2``."""
        Mt = self.M_total
        rhs = np.linalg.solve(Mt, self.A @ Mt - self.dM_total) - self.Lam
        return float(frobenius(self.R - rhs))


def _residual_matrices(xi, omega, mu, delta, d_delta):
    """``R = M2^{-1} R2 M2 - M2^{-1} dM2/dt`` from the closed-form pieces (vectorized)."""
    r_plus = 0.5j * xi * (1.0 - omega) * (1.0 / omega - 1.0)
    r_minus = 0.5j * xi * (1.0 - omega) * (1.0 / omega + 1.0)
    R2 = np.stack([np.stack([r_plus, np.conj(r_minus)], -1), np.stack([r_minus, np.conj(r_plus)], -1)], -2)
    one = np.ones_like(delta)
    M2 = np.stack([np.stack([one, np.conj(delta)], -1), np.stack([delta, one], -1)], -2)
    det = 1.0 - np.abs(delta) ** 2
    M2inv = np.stack([np.stack([one, -np.conj(delta)], -1), np.stack([-delta, one], -1)], -2) / det[..., None, None]
    dlog = np.stack(
        [
            np.stack([-np.conj(delta) * d_delta, np.conj(d_delta)], -1),
            np.stack([d_delta, -delta * np.conj(d_delta)], -1),
        ],
        -2,
    ) / det[..., None, None]
    return M2inv @ R2 @ M2 - dlog


def interzone_transform(c: DissipationCoefficient, t: float, xi_norm: float) -> InterZoneTransform:
    """Matrices of the intermediate-zone change of variables at ``(t, |xi|)``."""
    if xi_norm <= 0.0:
        raise DomainError("the intermediate-zone transform needs |xi| > 0")
    om = _omega_jet(c, t, 1)
    mu = c.principal.jet(t, 1)
    if not mu.value.real < 2.0 * xi_norm:
        raise DomainError("mu / (2|xi|) must stay below one")
    dl = _tilde_delta(mu, xi_norm)
    w, dw = om.value.real, om.derivative(1).real
    d, dd = dl.value, dl.derivative(1)
    M1 = np.diag([1.0, w]).astype(complex)
    M2 = diagonalizer_matrix(d)
    dM1 = np.diag([0.0, dw]).astype(complex)
    dM2 = np.array([[0.0, np.conj(dd)], [dd, 0.0]], dtype=complex)
    dM_total = dM1 @ BASE_MATRIX @ M2 + M1 @ BASE_MATRIX @ dM2
    mu_v = mu.value.real
    lam = complex(-0.5 * mu_v, xi_norm * math.sqrt(1.0 - (mu_v / (2.0 * xi_norm)) ** 2))
    b = float(c.b(t))
    A = np.array([[0.0, 1j * xi_norm], [1j * xi_norm, -b]], dtype=complex)
    R = _residual_matrices(xi_norm, np.array(w), np.array(mu_v), np.array(d), np.array(dd))
    return InterZoneTransform(
        float(t), float(xi_norm), w, M1, BASE_MATRIX.copy(), M2, lam, np.diag([lam, np.conj(lam)]), R, A, dM_total, d
    )


@dataclass(frozen=True)
class ResidualIntegral:
    """``int ||R(s)|| ds`` from ``t_D`` and from ``t_H`` (``nan`` where the start is undefined)."""

    from_tD: float
    from_tH: float
    horizon: float
    tail_bound: float
    divergent: bool


def _phase_horizon(c: DissipationCoefficient, max_phase: float) -> float:
    op = c.oscillating
    if isinstance(op, Sine):
        return max_phase ** (1.0 / op.q) - 1.0
    if isinstance(op, BumpTrain):
        return (max_phase * op.q / (2.0 * math.pi * (op.m + 2)) + 1.0) ** (1.0 / op.q) - 1.0
    return 1e6


def _residual_from(c, xi, t0, horizon, rng):
    hi = max(horizon, t0)
    quad = 0.0
    if hi > t0:
        edges = _panels(c, t0, hi, per_radian=0.5, base=64)
        half = 0.5 * np.diff(edges)[:, None]
        s = 0.5 * (edges[:-1] + edges[1:])[:, None] + half * _GL8_X
        omega = np.exp(sigma_tail(c.oscillating, s))
        mu = c.principal.mu(s)
        dmu = np.array([c.principal.jet(float(x), 1).derivative(1).real for x in s.ravel()]).reshape(s.shape)
        a = mu / (2.0 * xi)
        root = np.sqrt(1.0 - a * a)
        delta = 1j * a / (1.0 + root)
        # d/dt [a / (1 + sqrt(1 - a^2))] = a' / (sqrt(1 - a^2) (1 + sqrt(1 - a^2)))
        d_delta = 1j * (dmu / (2.0 * xi)) / (root * (1.0 + root))
        R = _residual_matrices(xi, omega, mu, delta, d_delta)
        quad = float((frobenius(R) * _GL8_W * half).sum())
    # Tail beyond the horizon: |delta| decreases, |1 - omega| <= omega1 |int sigma|.
    a = float(c.principal.mu(hi)) / (2.0 * xi)
    d = a / (1.0 + math.sqrt(1.0 - a * a))
    cond = (2.0 + 2.0 * d * d) / (1.0 - d * d)
    stab = stabilization_tail(c.oscillating, hi)
    r2 = math.sqrt(2.0) * xi * rng.omega1 * (1.0 / rng.omega0 + 1.0) * (stab.value + stab.error)
    tail = cond * r2 + math.sqrt(2.0 + 2.0 * d * d) / (1.0 - d * d) * d
    return quad + tail, tail


def interzone_residual_integral(
    c: DissipationCoefficient, zp: ZonePartition, xi_norm: float, max_phase: float = DEFAULT_MAX_PHASE
) -> ResidualIntegral:
    """Quadrature of ``||R(s, xi)||`` up to an oscillation horizon plus an analytic tail bound.

    ``from_tH`` is divided by ``varrho(|xi|)``.
    """
    horizon = _phase_horizon(c, max_phase)
    try:
        rng = omega_range(c.oscillating)
        t_d = zp.t_dissipative(xi_norm)
        t_h = zp.t_hyperbolic(xi_norm)
        from_d, tail = (math.nan, 0.0) if t_d is None else _residual_from(c, xi_norm, t_d, horizon, rng)
        from_h = math.nan
        if t_h is not None:
            from_h, tail_h = _residual_from(c, xi_norm, t_h, horizon, rng)
            varrho = 1.0 if isinstance(zp.weight, Unit) else float(zp.weight.rho(xi_norm))
            from_h /= varrho
            tail = max(tail, tail_h)
    except HypothesisViolated:
        return ResidualIntegral(math.inf, math.inf, horizon, math.inf, True)
    return ResidualIntegral(from_d, from_h, horizon, tail, False)
