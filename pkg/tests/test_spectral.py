import math

import numpy as np
import pytest
from scipy.integrate import quad

from osciwave.coeffs import ConstantDamping, DissipationCoefficient, PrincipalPart, Sine
from osciwave.errors import ConfigError, DomainError
from osciwave.modes import integrate_mode
from osciwave.rates import RateFunctions
from osciwave.spectral import (
    Bandlimited,
    GevreyExp,
    InitialData,
    Sobolev,
    cut_radius,
    h_norm,
    radial_grid,
    sphere_area,
    total_energy,
    zone_boundaries,
    zone_split,
)
from osciwave.zones import Gevrey, Log, Unit, ZonePartition

# mpmath quadrature of the weighted norm integrand.
SOBOLEV2_LOG = {0.0: 2.3561944901923449, 1.0: 23.632015088338079, 2.0: 257.03543631561373}
GEVREY21_AT_HALF = 5.8860710587430771

FREE = DissipationCoefficient(ConstantDamping(0.0))
GEV = InitialData(GevreyExp(2.0, 1.0))


class TestData:
    def test_identity(self):
        d = InitialData(Sobolev(1.5), n=2)
        r = np.linspace(0, 10, 11)
        np.testing.assert_allclose((1 + r * r) * d.v0_hat(r) ** 2 + d.v1_hat(r) ** 2, 2 * d.profile(r) ** 2)

    def test_sphere_area(self):
        assert sphere_area(1) == 2.0
        assert sphere_area(2) == pytest.approx(2 * math.pi)
        assert sphere_area(3) == pytest.approx(4 * math.pi)

    def test_bandlimited_support(self):
        d = InitialData(Bandlimited(3.0))
        assert float(d.profile(0.0)) == 1.0
        assert float(d.profile(3.0)) == 0.0 and float(d.profile(5.0)) == 0.0

    @pytest.mark.parametrize("fam", [lambda: GevreyExp(1.0, 1.0), lambda: GevreyExp(2.0, 0.0), lambda: Bandlimited(0.0)])
    def test_family_checks(self, fam):
        with pytest.raises(ConfigError):
            fam()

    def test_dimension(self):
        with pytest.raises(ConfigError):
            InitialData(Sobolev(1.0), n=0)


class TestNorm:
    @pytest.mark.parametrize("kappa", sorted(SOBOLEV2_LOG))
    def test_log_weight_oracle(self, kappa):
        assert h_norm(InitialData(Sobolev(2.0)), Log(), kappa) == pytest.approx(SOBOLEV2_LOG[kappa], rel=1e-10)

    def test_gevrey_oracle(self):
        assert h_norm(GEV, Gevrey(2.0), 0.5) == pytest.approx(GEVREY21_AT_HALF, rel=1e-10)

    def test_gevrey_divergent(self):
        assert h_norm(GEV, Gevrey(2.0), 2.0) == math.inf
        assert h_norm(GEV, Gevrey(1.5), 0.1) == math.inf

    def test_zero(self):
        assert h_norm(InitialData(Sobolev(1.0), amplitude=0.0), Log(), 3.0) == 0.0

    @pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
    def test_equivalent_to_sobolev_integral(self, kappa):
        # (e + r)^{2 kappa} / (1 + r^2)^kappa lies in [1, (e^2 + 1)^kappa].
        d = InitialData(Sobolev(3.0))
        sob = 2 * quad(lambda r: (1 + r * r) ** kappa * 2 * float(d.profile(r)) ** 2, 0, np.inf, limit=200)[0]
        ratio = h_norm(d, Log(), kappa) / sob
        assert 1.0 <= ratio <= (math.e**2 + 1) ** kappa

    def test_monotone_in_kappa(self):
        for w in (Unit(), Log(), Gevrey(3.0)):
            vals = [h_norm(GEV, w, k) for k in (0.0, 0.1, 0.3, 0.6, 0.9)]
            assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_gevrey_data_in_every_log_space(self):
        # Finite for every kappa; at kappa = 50 the value itself exceeds the float range.
        for kappa in (1.0, 5.0, 20.0):
            assert math.isfinite(h_norm(GEV, Log(), kappa))

    def test_negative_kappa(self):
        with pytest.raises(DomainError):
            h_norm(GEV, Log(), -1.0)


class TestGrid:
    def test_weights_integrate(self):
        r, w = radial_grid(100.0, 400)
        assert r[0] == pytest.approx(1e-3) and r[-1] == pytest.approx(100.0)
        assert w @ np.exp(-r) == pytest.approx(1 - math.exp(-100), rel=1e-4)

    def test_bad_cut(self):
        with pytest.raises(DomainError):
            radial_grid(1e-4)

    def test_cut_radius(self):
        d = GEV
        R = cut_radius(d)
        dens = lambda r: float(d.radial_factor(r) * d.energy_density(r))
        total = quad(dens, 0, np.inf, limit=200)[0]
        assert quad(dens, R, np.inf)[0] <= 1e-10 * total
        assert quad(dens, R / 1.02, np.inf)[0] > 1e-10 * total


class TestTotalEnergy:
    def test_conservation(self):
        s = total_energy(GEV, FREE, [1.0, 10.0, 20.0], mode_grid=radial_grid(cut_radius(GEV), 48))
        np.testing.assert_allclose(s.energy / s.energy[0], 1.0, atol=1e-6)

    def test_locality(self):
        c = DissipationCoefficient(PrincipalPart(0.5), Sine(-1, 3))
        grid = (np.array([2.0]), np.array([0.25]))
        s = total_energy(GEV, c, [3.0], mode_grid=grid, rtol=1e-11)
        tr = integrate_mode(c, 2.0, 3.0, rtol=1e-11, v0=GEV.mode_state(2.0), samples=[0.0, 3.0])
        assert s.energy[-1] == pytest.approx(0.25 * 2.0 * tr.energy[-1], rel=1e-12)

    def test_initial_norm(self):
        s = total_energy(GEV, FREE, [1.0])
        assert s.E0 == pytest.approx(h_norm(GEV, Unit(), 0.0), rel=1e-5)
        assert s.tail_bound < 1e-6

    def test_grid_doubling(self):
        # The density ripples like cos(2 r t); the default grid resolves it for t up to about 9.
        c = DissipationCoefficient(PrincipalPart(0.5))
        R = cut_radius(GEV)
        times = [1.0, 3.0, 5.0, 9.0]
        a = total_energy(GEV, c, times, mode_grid=radial_grid(R, 256))
        b = total_energy(GEV, c, times, mode_grid=radial_grid(R, 512))
        np.testing.assert_allclose(a.energy, b.energy, rtol=1e-4)


@pytest.fixture(scope="module")
def series():
    c = DissipationCoefficient(PrincipalPart(0.5))
    return total_energy(GEV, c, [2.0, 20.0, 200.0], mode_grid=radial_grid(cut_radius(GEV), 64))


@pytest.fixture(scope="module")
def zp():
    return ZonePartition(2.0, PrincipalPart(0.5), RateFunctions(-1, 1), Gevrey(2.0))


class TestZoneSplit:
    def test_initial_bands(self, series, zp):
        assert zone_boundaries(zp, 0.0) == pytest.approx((2.0, 2.0))
        I = zone_split(series, zp, 0)
        assert I[1] == 0.0 and I[2] == 0.0

    def test_partition(self, series, zp):
        for k in range(series.t.size):
            assert sum(zone_split(series, zp, k)) == pytest.approx(series.energy[k], rel=1e-10)

    def test_bands_move(self, series, zp):
        low, high = zone_boundaries(zp, 200.0)
        assert low < zp.N < high
