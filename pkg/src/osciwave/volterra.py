"""Dissipative-zone representation by Volterra/Picard iteration.

In the dissipative zone the fundamental matrix ``(v_jk)`` of the mode system
solves the coupled recursion

    v_1k = delta_1k + i|xi| int_0^t v_2k,
    v_2k = eta_b(t) (delta_k2 + i|xi| int_0^t eta_b^{-1} v_1k),

which is iterated to a fixed point. Equivalently ``w = p + int q w`` with
kernel ``q(t, tau) = -|xi|^2 eta_b(t)^{-1} int_tau^t eta_b``; its Neumann
terms decay factorially and are compared with explicit bounds.

All iterated integrals are cumulative spectral integrals on panels of
Gauss-Legendre nodes. The panels are refined to resolve the oscillation of
``eta_b``; beyond an oscillation-phase cap the factor ``omega`` inside the
integrals is replaced by its mean one, matching the averaged frame of
:mod:`osciwave.modes`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L
from numpy.typing import ArrayLike, NDArray

from .coeffs import ConstantDamping, DissipationCoefficient, Sine, Zero
from .errors import DomainError, SeriesDivergence
from .tails import omega_range, sigma_integral, sigma_tail

NODES_PER_PANEL = 16
PANELS_PER_DECADE = 64
MAX_DEPTH = 40
DEFAULT_MAX_PHASE = 2e4


@dataclass(frozen=True)
class EtaFunctions:
    """``eta_b``, ``eta_mu`` and ``omega`` for one coefficient."""

    coefficient: DissipationCoefficient
    omega0: float
    omega1: float
    omega_at_zero: float

    def eta_mu(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.coefficient.principal.eta(t)

    def eta_b(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.eta_mu(t) * np.exp(-sigma_integral(self.coefficient.oscillating, t))

    def omega(self, t: ArrayLike) -> NDArray[np.float64]:
        return np.exp(sigma_tail(self.coefficient.oscillating, t))

    def int_eta_mu(self, t: ArrayLike) -> NDArray[np.float64]:
        """``int_0^t eta_mu``, closed form for the canonical principal part."""
        t = np.asarray(t, dtype=float)
        pp = self.coefficient.principal
        if isinstance(pp, ConstantDamping):
            return t if pp.value == 0 else -np.expm1(-pp.value * t) / pp.value
        return ((1.0 + t) ** (1.0 - pp.mu0) - 1.0) / (1.0 - pp.mu0)

    def sandwich_defect(self, t: ArrayLike) -> float:
        """Largest violation of ``(w0/w(0)) eta_mu <= eta_b <= (w1/w(0)) eta_mu`` (<= 0 when it holds)."""
        em = self.eta_mu(t)
        eb = self.eta_b(t)
        lo = self.omega0 / self.omega_at_zero * em - eb
        hi = eb - self.omega1 / self.omega_at_zero * em
        return float(max(np.max(lo / em), np.max(hi / em)))


def eta_functions(c: DissipationCoefficient) -> EtaFunctions:
    rng = omega_range(c.oscillating)
    w0 = float(np.exp(sigma_tail(c.oscillating, 0.0)))
    return EtaFunctions(c, rng.omega0, rng.omega1, w0)


@lru_cache(maxsize=None)
def _reference_panel(n: int) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Gauss-Legendre nodes, weights and the matrix of ``int_{-1}^{x_i} l_j``."""
    x, w = L.leggauss(n)
    vander = L.legvander(x, n - 1)
    coeffs = np.linalg.inv(vander)  # column j: Legendre coefficients of l_j
    S = np.empty((n, n))
    for j in range(n):
        S[:, j] = L.legval(x, L.legint(coeffs[:, j], lbnd=-1.0))
    return x, w, S


@dataclass(frozen=True)
class PanelGrid:
    """Composite Gauss-Legendre grid with cumulative integration."""

    edges: NDArray[np.float64]
    nodes: NDArray[np.float64]  # (panels, n)
    half: NDArray[np.float64]  # (panels,)
    weights: NDArray[np.float64]
    S: NDArray[np.float64]

    @classmethod
    def build(cls, edges: ArrayLike, n: int = NODES_PER_PANEL) -> PanelGrid:
        edges = np.asarray(edges, dtype=float)
        x, w, S = _reference_panel(n)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes = mid[:, None] + half[:, None] * x[None, :]
        return cls(edges, nodes, half, w, S)

    def cumulative(self, f: NDArray) -> tuple[NDArray, NDArray]:
        """``int_0^t f`` at the nodes and at the panel edges."""
        inner = (f @ self.S.T) * self.half[:, None]
        totals = (f @ self.weights) * self.half
        at_edges = np.concatenate([[0.0], np.cumsum(totals)])
        return at_edges[:-1, None] + inner, at_edges


def _panel_edges(c: DissipationCoefficient, t_end: float, samples: NDArray, max_phase: float) -> NDArray:
    decades = math.log10(1.0 + t_end)
    n = max(8, int(math.ceil(PANELS_PER_DECADE * decades)))
    edges = np.expm1(np.linspace(0.0, math.log1p(t_end), n + 1))
    edges = np.union1d(edges, samples)
    op = c.oscillating
    if isinstance(op, Zero):
        return edges
    t_cap = t_end if not isinstance(op, Sine) else min(t_end, max_phase ** (1.0 / op.q) - 1.0)
    refined = [edges[0]]
    for lo, hi in zip(edges[:-1], edges[1:]):
        if lo < t_cap:
            rate = float(op.oscillation_rate(hi))
            k = max(1, int(math.ceil(rate * (hi - lo) / 4.0)))
            refined.extend(np.linspace(lo, hi, k + 1)[1:])
        else:
            refined.append(hi)
    return np.asarray(refined)


def _quadrature_eta(c: DissipationCoefficient, ef: EtaFunctions, s: NDArray, max_phase: float) -> NDArray:
    """``eta_b`` inside integrals; beyond the phase cap ``omega`` is averaged to one."""
    op = c.oscillating
    if isinstance(op, Sine):
        t_cap = max_phase ** (1.0 / op.q) - 1.0
        out = ef.eta_b(s)
        late = s >= t_cap
        if late.any():
            out[late] = ef.eta_mu(s[late]) / ef.omega_at_zero
        return out
    return ef.eta_b(s)


@dataclass(frozen=True)
class VolterraSolution:
    """Fundamental matrix ``Phi[k] = (v_jl)(t_k)`` from the Picard iteration."""

    xi_norm: float
    t: NDArray[np.float64]
    Phi: NDArray[np.complex128]
    iterations: int
    increment: float


def _setup(c, xi_norm, t_end, samples, max_phase, N):
    if xi_norm <= 0 or t_end <= 0:
        raise DomainError("need |xi| > 0 and t_end > 0")
    if N is not None:
        t_d = c.principal.inverse(c.principal.mu0 * xi_norm / N) if xi_norm <= N else -1.0
        if t_end > t_d * (1 + 1e-12):
            raise DomainError(f"(t={t_end}, |xi|={xi_norm}) leaves the dissipative zone (t_D={t_d})")
    ts = np.asarray(samples if samples is not None else np.expm1(np.linspace(0, math.log1p(t_end), 65)), dtype=float)
    ts = np.union1d([0.0], ts)
    grid = PanelGrid.build(_panel_edges(c, t_end, ts, max_phase))
    ef = eta_functions(c)
    eq = _quadrature_eta(c, ef, grid.nodes, max_phase)
    return ts, grid, ef, eq


def picard_solve(
    c: DissipationCoefficient,
    xi_norm: float,
    t_end: float,
    depth: int = MAX_DEPTH,
    samples: ArrayLike | None = None,
    tol: float = 1e-10,
    max_phase: float = DEFAULT_MAX_PHASE,
    N: float | None = None,
) -> VolterraSolution:
    """Iterate the coupled recursion until successive iterates agree to ``tol``.

    If ``N`` is given the endpoint is checked to lie in the dissipative zone.
    """
    if depth > MAX_DEPTH:
        raise DomainError(f"depth is limited to {MAX_DEPTH}")
    ts, grid, ef, eq = _setup(c, xi_norm, t_end, samples, max_phase, N)
    inv = 1.0 / eq
    ik = 1j * xi_norm
    shape = grid.nodes.shape
    Phi_nodes = np.zeros((2, 2) + shape, dtype=complex)
    Phi_nodes[0, 0] = 1.0
    Phi_nodes[1, 1] = eq
    increment = math.inf
    it = 0
    for it in range(1, depth + 1):
        new = np.empty_like(Phi_nodes)
        for k in range(2):
            c1, _ = grid.cumulative(Phi_nodes[1, k])
            new[0, k] = (1.0 if k == 0 else 0.0) + ik * c1
            c2, _ = grid.cumulative(inv * new[0, k])
            new[1, k] = eq * ((1.0 if k == 1 else 0.0) + ik * c2)
        scale = max(1.0, float(np.abs(new).max()))
        increment = float(np.abs(new - Phi_nodes).max()) / scale
        Phi_nodes = new
        if increment < tol:
            break
    else:
        raise SeriesDivergence(f"Picard iteration did not reach {tol} after {depth} sweeps ({increment:.3g})")

    # Evaluate at the panel edges, then pick the sample times.
    eta_edges = ef.eta_b(grid.edges)
    Phi_edges = np.empty((grid.edges.size, 2, 2), dtype=complex)
    for k in range(2):
        _, e1 = grid.cumulative(Phi_nodes[1, k])
        v1 = (1.0 if k == 0 else 0.0) + ik * e1
        _, e2 = grid.cumulative(inv * Phi_nodes[0, k])
        # The outer factor is exact; the integral carries the averaged omega.
        v2 = eta_edges * ((1.0 if k == 1 else 0.0) + ik * e2)
        Phi_edges[:, 0, k] = v1
        Phi_edges[:, 1, k] = v2
    idx = np.searchsorted(grid.edges, ts)
    return VolterraSolution(float(xi_norm), ts, Phi_edges[idx], it, increment)


@dataclass(frozen=True)
class NeumannTerms:
    """Signed terms, absolute nested integrals and their factorial bounds.

    Arrays have shape ``(terms, samples)``; ``k`` selects ``p_1`` or ``p_2``.
    """

    k: int
    t: NDArray[np.float64]
    signed: NDArray[np.complex128]
    absolute: NDArray[np.float64]
    bound: NDArray[np.float64]


def neumann_terms(
    c: DissipationCoefficient,
    xi_norm: float,
    t_end: float,
    k: int,
    terms: int = 12,
    samples: ArrayLike | None = None,
    max_phase: float = DEFAULT_MAX_PHASE,
) -> NeumannTerms:
    """Terms of ``w = p + int q w`` for ``p = p_k`` and their bounds.

    ``p_1 = |xi| eta_b^{-1}``, ``p_2 = i|xi| eta_b^{-1} int_0^t eta_b``. With
    ``|q(t, tau)| = |xi|^2 eta_b(t)^{-1} int_tau^t eta_b`` each nested integral is
    ``|xi|^2 eta_b^{-1} Cum[eta_b Cum[f]]``.
    """
    if k not in (1, 2):
        raise DomainError("k must be 1 or 2")
    ts, grid, ef, eq = _setup(c, xi_norm, t_end, samples, max_phase, None)
    inv = 1.0 / eq
    xi2 = xi_norm**2
    if k == 1:
        p = xi_norm * inv + 0j
    else:
        cum_eta, _ = grid.cumulative(eq)
        p = 1j * xi_norm * inv * cum_eta

    def apply(f):
        inner, _ = grid.cumulative(f)
        outer_n, outer_e = grid.cumulative(eq * inner)
        return -xi2 * inv * outer_n, outer_e

    idx = np.searchsorted(grid.edges, ts)
    eq_edges = _quadrature_eta(c, ef, grid.edges, max_phase)
    signed = np.empty((terms, ts.size), dtype=complex)
    absolute = np.empty((terms, ts.size))
    # Term 0 at the edges.
    if k == 1:
        p_edges = xi_norm / eq_edges + 0j
    else:
        _, ce = grid.cumulative(eq)
        p_edges = 1j * xi_norm / eq_edges * ce
    signed[0] = p_edges[idx]
    absolute[0] = np.abs(p_edges[idx])
    cur_s, cur_a = p, np.abs(p)
    for ell in range(1, terms):
        nxt_s, edge_s = apply(cur_s)
        nxt_a, edge_a = apply(cur_a)
        signed[ell] = (-xi2 / eq_edges * edge_s)[idx]
        absolute[ell] = (xi2 / eq_edges * edge_a)[idx].real
        cur_s, cur_a = nxt_s, -nxt_a.real

    ratio = ef.omega1 / ef.omega0
    em = ef.eta_mu(ts)
    if k == 1:
        pre = ef.omega_at_zero / ef.omega0 * xi_norm / em
    else:
        pre = ratio * xi_norm / em * ef.int_eta_mu(ts)
    ell = np.arange(terms)[:, None]
    x = math.sqrt(ratio) * xi_norm * ts[None, :]
    log_fact = np.array([math.lgamma(2 * e + 1) for e in range(terms)])[:, None]
    with np.errstate(divide="ignore"):
        bound = pre[None, :] * np.exp(2 * ell * np.log(np.where(x > 0, x, 1.0)) - log_fact)
    bound = np.where((x == 0) & (ell > 0), 0.0, bound)
    return NeumannTerms(k, ts, signed, absolute, bound)


@dataclass(frozen=True)
class SeriesBoundReport:
    """Measured ``|v_jk|`` (normalized as in the bounds) divided by the explicit constants."""

    ratios: dict[str, float]
    constants: dict[str, float]

    @property
    def all_within(self) -> bool:
        return all(r <= 1.0 for r in self.ratios.values())


def series_bound_check(solution: VolterraSolution, ef: EtaFunctions, N: float) -> SeriesBoundReport:
    """Compare with ``|v11| <= (w1/w0) e^{sqrt(w1/w0) N}``, ``|v21| <= (w1/w0)^2 e^{..} N``,
    ``|v12| <= K eta_mu`` and ``|v22| <= (w1/w(0)) (1 + (w1/w(0)) K N) eta_mu``."""
    w0, w1, wz = ef.omega0, ef.omega1, ef.omega_at_zero
    mu0 = ef.coefficient.principal.mu0
    e = math.exp(math.sqrt(w1 / w0) * N)
    K = N * w1**2 / (w0 * wz * (1.0 - mu0)) * e
    consts = {
        "v11": w1 / w0 * e,
        "v21": (w1 / w0) ** 2 * e * N,
        "v12": K,
        "v22": w1 / wz * (1.0 + w1 / wz * K * N),
    }
    em = ef.eta_mu(solution.t)
    P = solution.Phi
    measured = {
        "v11": float(np.abs(P[:, 0, 0]).max()),
        "v21": float(np.abs(P[:, 1, 0]).max()),
        "v12": float((np.abs(P[:, 0, 1]) / em).max()),
        "v22": float((np.abs(P[:, 1, 1]) / em).max()),
    }
    return SeriesBoundReport({k: measured[k] / consts[k] for k in consts}, consts)


def wronskian_defect(solution: VolterraSolution, ef: EtaFunctions) -> float:
    """``max |det Phi - eta_b|`` (the system has trace ``-b``)."""
    det = solution.Phi[:, 0, 0] * solution.Phi[:, 1, 1] - solution.Phi[:, 0, 1] * solution.Phi[:, 1, 0]
    return float(np.abs(det - ef.eta_b(solution.t)).max())
