import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from osciwave.coeffs import (
    BumpProfile,
    BumpTrain,
    ConstantDamping,
    DissipationCoefficient,
    PrincipalPart,
    Sine,
    Zero,
    eval_b_jet,
    eval_mu_jet,
    eval_sigma_jet,
    headline_coefficient,
)
from osciwave.errors import ContractViolation, SmoothnessExceeded

# Frozen mpmath values.
MU07_DERIVS_AT_3 = [0.175, -0.04375, 0.021875, -0.01640625]
SIN1 = 0.84147098480789651
TWO_COS1 = 1.0806046117362794
HALF_PLUS_SIN1 = 1.3414709848078965
PROFILE_CM = {1: 1.4575535990288375, 2: 1.6369416485730835}


class TestPrincipal:
    def test_jet_at_zero(self):
        np.testing.assert_allclose(eval_mu_jet(PrincipalPart(0.5), 0.0, 1).coeffs, [0.5, -0.5])

    def test_value_at_one(self):
        np.testing.assert_allclose(eval_mu_jet(PrincipalPart(0.5), 1.0, 0).coeffs, [0.25])

    def test_derivatives_match_symbolic(self):
        d = eval_mu_jet(PrincipalPart(0.7), 3.0, 3).derivatives().real
        np.testing.assert_allclose(d, MU07_DERIVS_AT_3, rtol=0, atol=1e-13)

    def test_grid_scan(self):
        pp = PrincipalPart(0.5)
        t = np.expm1(np.linspace(0, math.log1p(1e6), 500))
        np.testing.assert_allclose((1 + t) * pp.mu(t), 0.5, rtol=1e-14)
        assert np.all(pp.mu(t) > 0)
        assert all(pp.jet(float(x), 1).derivative(1).real < 0 for x in t)

    @pytest.mark.parametrize("mu0", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_effective_or_nonpositive(self, mu0):
        with pytest.raises(ContractViolation):
            PrincipalPart(mu0)

    def test_onset_time_fixed(self):
        with pytest.raises(ContractViolation):
            PrincipalPart(0.5, T=1.0)

    def test_inverse_and_integral(self):
        pp = PrincipalPart(0.5)
        assert float(pp.inverse(pp.mu(7.0))) == pytest.approx(7.0, rel=1e-14)
        assert float(pp.integral(3.0)) == pytest.approx(0.5 * math.log(4.0), rel=1e-14)
        assert float(pp.eta(3.0)) * 4.0**0.5 == pytest.approx(1.0, rel=1e-14)


class TestProfile:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_unit_maximum(self, m):
        x = np.linspace(0, 1, 200001)
        assert np.abs(BumpProfile(m)(x)).max() == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("m", [1, 2])
    def test_normalization_matches_root_finding(self, m):
        assert BumpProfile(m).c_m == pytest.approx(PROFILE_CM[m], rel=1e-10)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_zero_mean(self, m):
        val, _ = quad(lambda x: float(BumpProfile(m)(x)), 0, 1, epsabs=1e-14, limit=200)
        assert abs(val) < 1e-12
        assert abs(float(BumpProfile(m).primitive(1.0))) < 1e-12

    @pytest.mark.parametrize("m", [1, 2, 4])
    def test_flat_endpoints(self, m):
        prof = BumpProfile(m)
        for x in (0.0, 1.0):
            assert np.abs(prof.jet(x, m).derivatives()).max() < 1e-10

    def test_jet_matches_values(self):
        prof = BumpProfile(2)
        j = prof.jet(0.3, 1)
        h = 1e-6
        fd = (float(prof(0.3 + h)) - float(prof(0.3 - h))) / (2 * h)
        assert j.value.real == pytest.approx(float(prof(0.3)), abs=1e-14)
        assert j.derivative(1).real == pytest.approx(fd, rel=1e-7)

    def test_rejects_m0(self):
        with pytest.raises(ContractViolation):
            BumpProfile(0)


class TestOscillating:
    def test_zero(self):
        np.testing.assert_array_equal(eval_sigma_jet(Zero(), 3.3, 2).coeffs, [0, 0, 0])

    def test_sine_jet(self):
        j = eval_sigma_jet(Sine(0, 2), 0.0, 1)
        assert j.value.real == pytest.approx(SIN1, abs=1e-15)
        assert j.derivative(1).real == pytest.approx(TWO_COS1, abs=1e-14)

    def test_sine_value(self):
        t = np.array([0.0, 0.5, 10.0])
        np.testing.assert_allclose(Sine(0.5, 3).value(t), (1 + t) ** 0.5 * np.sin((1 + t) ** 3))

    @pytest.mark.parametrize("p,q", [(-1.5, 2), (0, 1), (0, 0.5)])
    def test_sine_domain(self, p, q):
        with pytest.raises(ContractViolation):
            Sine(p, q)

    def test_bump_between_bursts(self):
        op = BumpTrain(-1, 2, 1, 0, BumpProfile(2))
        # Burst 2 is [2, 2.5], burst 3 starts at 3.
        np.testing.assert_array_equal(eval_sigma_jet(op, 2.7, 2).coeffs, [0, 0, 0])
        assert float(op.value(2.7)) == 0.0

    def test_bump_value_inside(self):
        op = BumpTrain(-1, 2, 1, 0, BumpProfile(1))
        # t_n = 2, local time 2 (t - 2).
        t = 2.1
        assert float(op.value(t)) == pytest.approx(0.5 * float(BumpProfile(1)(0.2)), rel=1e-14)

    def test_bump_smoothness_exceeded(self):
        op = BumpTrain(-1, 2, 1, 0, BumpProfile(1))
        with pytest.raises(SmoothnessExceeded):
            eval_sigma_jet(op, 1.5, 2)
        with pytest.raises(SmoothnessExceeded):
            DissipationCoefficient(PrincipalPart(0.5), op, m=2)

    def test_bump_overlap_rejected(self):
        with pytest.raises(ContractViolation):
            BumpTrain(-1, 2, 1, 1.5, BumpProfile(1))

    @pytest.mark.parametrize("h", [0.0, 1.0])
    def test_bump_gluing(self, h):
        m = 2
        op = BumpTrain(0, 2, 1, h, BumpProfile(m))
        for n in (1, 2, 5, 9):
            start, end = op.start(n), op.start(n) + op.length(n)
            for t in (start + 1e-9, end - 1e-9):
                d = eval_sigma_jet(op, t, m).derivatives()
                # Each derivative vanishes at the seam; near it the k-th one is O(eps^(m+1-k)).
                assert np.abs(d).max() < 1e-8 * op.start(n) ** (op.q - 1) ** m * 10

    def test_bump_burst_geometry(self):
        op = BumpTrain(-1, 2, 2, 1, BumpProfile(1))
        assert op.start(3) == 9.0
        assert op.count(3) == 3
        assert op.length(3) == pytest.approx(3 / 9)
        b = op.locate(9.0 + 1.5 / 9)
        assert b is not None and b.n == 3 and b.local == pytest.approx(0.5)


class TestCoefficient:
    def test_principal_only(self):
        c = DissipationCoefficient(PrincipalPart(0.5))
        np.testing.assert_allclose(eval_b_jet(c, 0.0, 0).coeffs, [0.5])

    def test_sine_sum(self):
        c = DissipationCoefficient(PrincipalPart(0.5), Sine(-1, 2))
        assert eval_b_jet(c, 0.0, 0).value.real == pytest.approx(HALF_PLUS_SIN1, abs=1e-15)

    @given(st.floats(0, 1e3), st.integers(0, 4))
    def test_jets_additive(self, t, order):
        c = DissipationCoefficient(PrincipalPart(0.3), Sine(-0.5, 2.5), m=4)
        total = eval_b_jet(c, t, order).coeffs
        parts = eval_mu_jet(c.principal, t, order).coeffs + eval_sigma_jet(c.oscillating, t, order).coeffs
        assert np.abs(total - parts).max() <= 1e-15 * max(1.0, float(np.abs(parts).max()))

    def test_pointwise_sum(self):
        c = headline_coefficient()
        t = np.linspace(0, 20, 101)
        np.testing.assert_allclose(c.b(t), c.mu(t) + c.sigma(t), rtol=0, atol=1e-15 * 100)

    def test_headline_parameters(self):
        c = headline_coefficient()
        assert c.mu0 == 0.5 and c.oscillating == Sine(0.5, 4.0) and c.m == 2

    def test_constant_damping(self):
        c = DissipationCoefficient(ConstantDamping(1.0))
        np.testing.assert_allclose(c.b([0.0, 5.0]), [1.0, 1.0])
        with pytest.raises(ContractViolation):
            ConstantDamping(-1.0)
