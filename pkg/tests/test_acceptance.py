"""Acceptance criteria at their stated tolerances and runtime limits.

Each test carries a ``criterion`` marker; the conftest prints one pass/fail
line per criterion at the end of the session.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from osciwave.coeffs import BumpProfile, BumpTrain, ConstantDamping, DissipationCoefficient, PrincipalPart, Sine
from osciwave.decayfit import boundedness_report, fit_exponent
from osciwave.diag import (
    build_hierarchy,
    find_n0,
    interzone_residual_integral,
    interzone_transform,
    phi_real_residual,
    rd_residual,
    symbol_scan,
    symbol_slopes,
)
from osciwave.hypotheses import check_cm_constant, stabilization_tail, thresholds
from osciwave.modes import energy_identity_residual, fundamental_matrix, integrate_mode, log_time_grid
from osciwave.rates import RateFunctions
from osciwave.scenario import auto_rates, load_scenario
from osciwave.spectral import cut_radius, radial_grid, total_energy
from osciwave.volterra import (
    DEFAULT_MAX_PHASE,
    eta_functions,
    neumann_terms,
    picard_solve,
    series_bound_check,
)
from osciwave.zones import ZonePartition


class Clock:
    def __init__(self, limit):
        self.limit = limit
        self.start = time.perf_counter()

    def check(self, record_property):
        elapsed = time.perf_counter() - self.start
        record_property("runtime_limit_s", self.limit)
        assert elapsed < self.limit, f"took {elapsed:.1f} s, limit {self.limit} s"


def decay_series(name):
    scn = load_scenario(name)
    run = scn.run
    ts = log_time_grid(run.t_end, run.samples)[1:]
    grid = radial_grid(cut_radius(scn.data), run.nodes, n=scn.data.n)
    series = total_energy(scn.data, scn.coefficient, ts, mode_grid=grid, rtol=run.rtol, max_phase=run.max_phase)
    return scn, series


@pytest.mark.criterion(1, "conservation")
def test_conservation(record_property):
    clock = Clock(1.0)
    free = DissipationCoefficient(ConstantDamping(0.0))
    worst = 0.0
    for xi in (0.1, 1.0, 10.0):
        traj = integrate_mode(free, xi, 100.0, rtol=1e-12)
        worst = max(worst, float(np.max(np.abs(traj.energy / traj.energy[0] - 1))))
    record_property("max_drift", f"{worst:.2e}")
    assert worst < 1e-7
    clock.check(record_property)


@pytest.mark.criterion(2, "energy identity")
def test_energy_identity(record_property):
    clock = Clock(10.0)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(10):
        mu0 = rng.uniform(0.05, 0.95)
        q = rng.uniform(1.5, 4.0)
        p = rng.uniform(-1.0, q - 1.5)
        c = DissipationCoefficient(PrincipalPart(mu0), Sine(p, q))
        xi = 10 ** rng.uniform(-1, 1)
        traj = integrate_mode(c, xi, 20.0, rtol=1e-9)
        worst = max(worst, energy_identity_residual(traj, c))
    record_property("max_residual", f"{worst:.2e}")
    assert worst < 1e-5
    clock.check(record_property)


@pytest.mark.criterion(3, "Volterra oracle equivalence")
def test_volterra_equivalence(record_property):
    clock = Clock(30.0)
    N = 10.0
    worst = 0.0
    for c in (DissipationCoefficient(PrincipalPart(0.5)), DissipationCoefficient(PrincipalPart(0.5), Sine(-1, 3))):
        ef = eta_functions(c)
        for xi in (0.01, 0.1, 1.0):
            t_end = N / xi - 1.0
            sol = picard_solve(c, xi, t_end, N=N)
            ref = fundamental_matrix(c, xi, sol.t, max_phase=DEFAULT_MAX_PHASE)
            err = np.linalg.norm(sol.Phi - ref, axis=(1, 2)) / np.linalg.norm(ref, axis=(1, 2))
            worst = max(worst, float(err.max()))
            assert series_bound_check(sol, ef, N).all_within
        for k in (1, 2):
            terms = neumann_terms(c, 1.0, N - 1.0, k)
            assert np.all(terms.absolute <= terms.bound * (1 + 1e-9))
    record_property("max_relative_error", f"{worst:.2e}")
    assert worst < 1e-5
    clock.check(record_property)


@pytest.mark.criterion(4, "diagonalization exactness")
def test_diagonalization_exactness(record_property):
    clock = Clock(5.0)
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        phi = complex(rng.uniform(-5, 5), rng.choice([-1, 1]) * 10 ** rng.uniform(-1.3, 1.7))
        r = rng.uniform(0, 0.999) * abs(phi.imag) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        worst = max(worst, rd_residual(phi, r) / max(1.0, abs(phi)))
    record_property("max_rd_residual", f"{worst:.2e}")
    assert worst < 1e-12
    c = DissipationCoefficient(PrincipalPart(0.5), Sine(-1, 2), m=3)
    phi_worst = 0.0
    for m in (1, 2, 3):
        for t, xi in ((0.0, 20.0), (1.3, 40.0), (5.0, 200.0), (12.0, 500.0)):
            phi_worst = max(phi_worst, phi_real_residual(c, build_hierarchy(c, t, xi, m)))
    record_property("max_phi_residual", f"{phi_worst:.2e}")
    assert phi_worst < 1e-8
    clock.check(record_property)


@pytest.mark.criterion(5, "symbol bounds")
def test_symbol_bounds(record_property):
    clock = Clock(60.0)
    for m in (1, 2):
        c = DissipationCoefficient(PrincipalPart(0.5), Sine(-1, 2), m=m)
        zp = ZonePartition(10.0, c.principal, auto_rates(c))
        n0 = find_n0(c, zp, m)
        record_property(f"N0_m{m}", n0)
        assert n0 <= 2**16
        zn = ZonePartition(max(n0, zp.N), zp.principal, zp.theta, zp.weight)
        scan = symbol_scan(c, zn, m, 64, 64)
        assert scan.points == 64 * 64
        assert np.all(np.isfinite(scan.r_sup))
        slopes = symbol_slopes(c, zn, m, t=3.0)
        record_property(f"slopes_m{m}", np.round(slopes, 3).tolist())
        assert np.all(slopes <= -np.arange(m + 1) + 0.1)
    clock.check(record_property)


@pytest.mark.criterion(6, "baseline decay number")
def test_baseline_decay(record_property):
    clock = Clock(300.0)
    scn, series = decay_series("baseline-decay")
    assert scn.coefficient.principal.mu0 == 0.5 and scn.data.n == 1
    fit = fit_exponent(series.t, series.energy, (1e2, 1e4))
    bounds = boundedness_report(series.t, series.energy, scn.coefficient, series.E0)
    record_property("slope", f"{fit.slope:.4f}")
    record_property("sup_ratio", f"{bounds.sup_ratio:.4g}")
    record_property("trend", f"{bounds.trend:.2e}")
    assert abs(fit.slope + 0.5) <= 0.05
    assert math.isfinite(bounds.sup_ratio)
    assert abs(bounds.trend) <= 0.05
    clock.check(record_property)


@pytest.mark.criterion(7, "headline boundedness")
def test_headline_boundedness(record_property):
    clock = Clock(600.0)
    scn, series = decay_series("ex11-headline")
    op = scn.coefficient.oscillating
    assert (op.p, op.q, scn.coefficient.principal.mu0, scn.data.family.nu) == (0.5, 4.0, 0.5, 2.0)
    assert series.t[-1] == 1e3
    bounds = boundedness_report(series.t, series.energy, scn.coefficient, series.E0, start=1.0)
    record_property("sup_ratio", f"{bounds.sup_ratio:.4g}")
    record_property("trend", f"{bounds.trend:.2e}")
    assert math.isfinite(bounds.sup_ratio)
    assert bounds.trend <= 0.1
    clock.check(record_property)


@pytest.mark.criterion(8, "stabilization tails")
def test_stabilization_tails(record_property):
    clock = Clock(120.0)
    cases = [
        (Sine(-1, 3), -1 - 3 + 2, RateFunctions.for_sine(-1, 3, 1)),
        (BumpTrain(-1, 2, 1, 0, BumpProfile(1)), -1 - 4 + 2 + 1, RateFunctions.for_bump_train(-1, 2, 1, 0, 1)),
    ]
    for op, exponent, rates in cases:
        ratios = [stabilization_tail(op, t).value / (1 + t) ** exponent for t in (0, 1, 10, 100, 1000)]
        record_property(type(op).__name__, np.round(ratios, 4).tolist())
        assert all(math.isfinite(x) and x > 0 for x in ratios)
        # Bounded with the right exponent: the ratio settles instead of drifting.
        assert 0.5 < ratios[-1] / ratios[-2] < 2.0
        cm = check_cm_constant(DissipationCoefficient(PrincipalPart(0.5), op, m=1), rates)
        assert np.all(np.isfinite(cm))
    clock.check(record_property)


@pytest.mark.criterion(9, "threshold algebra")
def test_threshold_algebra(record_property):
    clock = Clock(1.0)
    m, q, r, h, nu, a = 2, Fraction(4), Fraction(3, 2), Fraction(1, 2), Fraction(2), Fraction(-1, 3)
    th = thresholds(m, q, r, h, nu, alpha=a)
    frac = Fraction(m, m + 1)
    gap = q - (h + 1) / r
    assert th.beta0 == frac * a + Fraction(1, m + 1)
    assert th.beta0_tilde == (frac + 1 / (nu - 1)) * a + Fraction(1, m + 1)
    assert th.p1 == -1
    assert th.p1_tilde == -1 + (q - 1) / nu
    assert th.p2 == -1 + frac * gap
    assert th.p2_tilde == th.p1_tilde + (frac + Fraction(1, m + 1) / nu) * gap
    no_rest = thresholds(m, q, r, r * q - 1, nu)
    assert no_rest.p2 == no_rest.p1 and no_rest.p2_tilde == no_rest.p1_tilde
    big = thresholds(2, 4.0, 1.0, 0.0, 1e6)
    record_property("p1_tilde_nu1e6_gap", f"{big.p1_tilde - big.p1:.1e}")
    assert abs(big.p1_tilde - big.p1) < 1e-5
    clock.check(record_property)


@pytest.mark.criterion(10, "interzone identity")
def test_interzone_identity(record_property):
    clock = Clock(120.0)
    scn = load_scenario("ex11-headline")
    c = scn.coefficient
    zp = ZonePartition(scn.run.N, c.principal, scn.rates, scn.weight)
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(100):
        xi = float(zp.N * 10 ** rng.uniform(-1, 1))
        t0 = zp.t_dissipative(xi) if xi <= zp.N else zp.t_hyperbolic(xi)
        t = float(t0 + rng.uniform(0, 50))
        tr = interzone_transform(c, t, xi)
        worst = max(worst, tr.defect())
        assert tr.lam.real == -0.5 * float(c.mu(t))
    record_property("max_defect", f"{worst:.2e}")
    assert worst < 1e-9
    for xi in scn.run.xi:
        res = interzone_residual_integral(c, zp, xi, scn.run.max_phase)
        start = res.from_tD if xi <= zp.N else res.from_tH
        assert not res.divergent and math.isfinite(start) and math.isfinite(res.tail_bound)
    clock.check(record_property)
