import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from osciwave.errors import ContractViolation, SmoothnessExceeded
from osciwave.taylor import (
    Jet,
    JetBaseZeroError,
    JetBranchError,
    JetOrderMismatch,
    jet_exp,
    jet_log,
    jet_mul,
    jet_reciprocal,
    jet_sin_cos,
    jet_sqrt,
    power_of_affine,
)

# Frozen mpmath values: Taylor coefficients f^(k)/k! at the base point.
SIN_COS_AT_07 = [
    0.49272486499423008, 0.16996714290024103, -0.98544972998846017,
    -0.11331142860016068, 0.32848324332948672, 0.022662285720032137,
]
RECIP_2_PLUS_SIN_AT_13 = [
    0.33743221405967626, -0.030457550131905962, 0.057604789325015706,
    -0.0050747232195722436, 0.0047932438325436645,
]
SQRT_1_PLUS_T2_AT_2 = [
    2.2360679774997897, 0.89442719099991588, 0.044721359549995794,
    -0.017888543819998318, 0.0067082039324993691,
]


def sin_jet(t0, order):
    return jet_sin_cos(Jet.variable(t0, order))[0]


def cos_jet(t0, order):
    return jet_sin_cos(Jet.variable(t0, order))[1]


class TestMul:
    def test_polynomial_square(self):
        a = Jet.of([1.0, 1.0, 0.0])
        np.testing.assert_array_equal(jet_mul(a, a).coeffs, [1, 2, 1])

    def test_one_is_identity(self):
        a = Jet.of([0.3, -1.2, 2.5, 0.7j])
        np.testing.assert_array_equal(jet_mul(a, Jet.one(3)).coeffs, a.coeffs)

    def test_sin_times_cos(self):
        prod = jet_mul(sin_jet(0.7, 5), cos_jet(0.7, 5))
        np.testing.assert_allclose(prod.coeffs.real, SIN_COS_AT_07, rtol=0, atol=1e-12)

    def test_order_mismatch(self):
        with pytest.raises(JetOrderMismatch):
            jet_mul(Jet.one(2), Jet.one(3))
        assert issubclass(JetOrderMismatch, ContractViolation)

    def test_derivative_is_exact_for_polynomials(self):
        # p(t) = 2 - t + 3 t^3 around t0 = 0.5
        a = Jet.variable(0.5, 3)
        p = 2.0 - a + 3.0 * a * a * a
        assert p.derivative(0) == pytest.approx(2 - 0.5 + 3 * 0.125, abs=1e-15)
        assert p.derivative(1) == pytest.approx(-1 + 9 * 0.25, abs=1e-15)
        assert p.derivative(2) == pytest.approx(18 * 0.5, abs=1e-15)
        assert p.derivative(3) == pytest.approx(18, abs=1e-15)


class TestReciprocal:
    def test_geometric_series(self):
        np.testing.assert_allclose(jet_reciprocal(Jet.of([1.0, 1.0, 0.0])).coeffs, [1, -1, 1])

    def test_one(self):
        np.testing.assert_array_equal(jet_reciprocal(Jet.one(4)).coeffs, Jet.one(4).coeffs)

    def test_two_plus_sin(self):
        r = jet_reciprocal(2.0 + sin_jet(1.3, 4))
        np.testing.assert_allclose(r.coeffs.real, RECIP_2_PLUS_SIN_AT_13, rtol=1e-6)

    def test_zero_base(self):
        with pytest.raises(JetBaseZeroError):
            jet_reciprocal(Jet.of([0.0, 1.0]))
        with pytest.raises(ZeroDivisionError):
            1.0 / Jet.of([0.0, 1.0])


class TestSqrt:
    def test_exact_square(self):
        np.testing.assert_allclose(jet_sqrt(Jet.of([1.0, 2.0, 1.0, 0.0])).coeffs, [1, 1, 0, 0], atol=1e-15)

    def test_one(self):
        np.testing.assert_array_equal(jet_sqrt(Jet.one(3)).coeffs, Jet.one(3).coeffs)

    def test_sqrt_one_plus_t_squared(self):
        t = Jet.variable(2.0, 4)
        np.testing.assert_allclose(jet_sqrt(1.0 + t * t).coeffs.real, SQRT_1_PLUS_T2_AT_2, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("c0", [0.0, -1.0, -0.5 + 2j])
    def test_branch(self, c0):
        with pytest.raises(JetBranchError):
            jet_sqrt(Jet.of([c0, 1.0]))


class TestElementary:
    def test_exp_log_roundtrip(self):
        a = Jet.of([1.5, -0.3, 0.2, 0.1])
        np.testing.assert_allclose(jet_log(jet_exp(a)).coeffs, a.coeffs, atol=1e-14)

    def test_power_of_affine_matches_binomial(self):
        j = power_of_affine(1.0, -0.5, 3)
        # generalized binomial coefficients of (2 + s)^(-1/2)
        expect = [2**-0.5, -0.5 * 2**-1.5, 0.375 * 2**-2.5, -0.3125 * 2**-3.5]
        np.testing.assert_allclose(j.coeffs.real, expect, rtol=1e-14)

    def test_shift_and_truncate(self):
        a = Jet.of([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(a.shift().coeffs, [2, 6])
        np.testing.assert_array_equal(a.truncate(1).coeffs, [1, 2])
        with pytest.raises(SmoothnessExceeded):
            Jet.one(0).shift()

    def test_from_derivatives_roundtrip(self):
        d = [1.0, -2.0, 6.0, 24.0]
        np.testing.assert_allclose(Jet.from_derivatives(d).derivatives().real, d)


coef = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


def jets(order, lead=None):
    head = coef if lead is None else lead
    return st.builds(lambda c0, rest: Jet.of([c0, *rest]), head, st.lists(coef, min_size=order, max_size=order))


@given(st.integers(0, 8).flatmap(lambda m: st.tuples(jets(m), jets(m), jets(m))))
def test_ring_axioms(triple):
    a, b, c = triple
    np.testing.assert_allclose(jet_mul(a, b).coeffs, jet_mul(b, a).coeffs, atol=1e-14 * 1e3)
    lhs = jet_mul(jet_mul(a, b), c).coeffs
    rhs = jet_mul(a, jet_mul(b, c)).coeffs
    scale = max(1.0, float(np.abs(lhs).max()))
    assert np.abs(lhs - rhs).max() <= 1e-14 * scale * 10


big_lead = st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False)


@given(st.integers(0, 8).flatmap(lambda m: jets(m, big_lead)))
def test_reciprocal_inverts(a):
    defect = jet_mul(a, jet_reciprocal(a)).coeffs - Jet.one(a.order).coeffs
    # Coefficients of 1/a grow like (|a|/|a_0|)^k; compare relative to that scale.
    scale = max(1.0, float(np.abs(a.coeffs).max() / abs(a.coeffs[0]))) ** a.order
    assert np.abs(defect).max() < 1e-12 * scale


pos_lead = st.floats(0.1, 10)


@given(st.integers(0, 8).flatmap(lambda m: jets(m, pos_lead)))
def test_sqrt_of_square(a):
    sq = jet_mul(a, a)
    back = jet_sqrt(sq).coeffs
    scale = max(1.0, float(np.abs(a.coeffs).max() / a.coeffs[0].real)) ** a.order
    assert np.abs(back - a.coeffs).max() < 1e-12 * scale * max(1.0, abs(a.coeffs[0]))
