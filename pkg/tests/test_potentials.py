import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mildrep import potentials as pot
from mildrep.potentials import DomainError, HypothesisError, RadialPotential

from .conftest import central_diff


def sextic():
    # w(r) = -r^4/4 + r^6: alpha = 4, C = 1, R = 1/2
    return RadialPotential.custom(
        lambda r: -(r**4) / 4 + r**6,
        lambda r: -(r**3) + 6 * r**5,
        lambda r: -3 * r**2 + 30 * r**4,
        alpha=4,
        C=1,
        R=0.5,
    )


def custom_power_law(a, b):
    return RadialPotential.custom(
        lambda r: r**a / a - r**b / b,
        lambda r: r ** (a - 1) - r ** (b - 1),
        lambda r: (a - 1) * r ** (a - 2) - (b - 1) * r ** (b - 2),
        alpha=b,
        C=1,
        R=(a / b) ** (1 / (a - b)),
    )


class TestEval:
    def test_origin(self, pl43):
        assert pot.eval(pl43, 0.0) == 0.0

    def test_unit(self, pl43):
        assert pot.eval(pl43, 1.0) == pytest.approx(-1 / 12, abs=1e-15)

    def test_sign_change_radius(self, pl43):
        assert pl43.R == pytest.approx(4 / 3, rel=1e-15)
        assert pot.eval(pl43, pl43.R) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("r", [math.nan, math.inf, -1.0])
    def test_bad_radius(self, pl43, r):
        with pytest.raises(DomainError):
            pot.eval(pl43, r)

    def test_vectorized(self, pl43):
        r = np.array([0.0, 1.0, 2.0])
        np.testing.assert_allclose(pl43.w(r), [0.0, -1 / 12, 4 - 8 / 3])

    def test_bad_exponents(self):
        with pytest.raises(DomainError):
            RadialPotential.power_law(3, 4)
        with pytest.raises(DomainError):
            RadialPotential.power_law(4, 2)


class TestDerivatives:
    def test_equilibrium(self, pl43):
        assert pot.deriv1(pl43, 1.0) == 0.0

    def test_mild_repulsion_limit(self, pl43):
        r = 1e-4
        assert pot.deriv1(pl43, r) * r ** (1 - 3) == pytest.approx(-1.0, abs=1e-3)

    def test_custom_against_finite_differences(self):
        p = sextic()
        r = 0.3
        assert p.dw(r) == pytest.approx(central_diff(p.w, r), abs=1e-6)
        assert p.d2w(r) == pytest.approx(central_diff(p.dw, r), abs=1e-6)

    @pytest.mark.parametrize("ab", [(4, 3), (6, 3), (8, 4), (6, 4), (5, 2.5)])
    def test_power_law_consistency(self, ab):
        p = RadialPotential.power_law(*ab)
        for r in np.linspace(0.2, 2.0, 10):
            assert p.dw(r) == pytest.approx(central_diff(p.w, r), rel=1e-6, abs=1e-9)
            assert p.d2w(r) == pytest.approx(central_diff(p.dw, r), rel=1e-6, abs=1e-9)

    def test_custom_undefined_derivative(self):
        p = RadialPotential.custom(
            lambda r: -(r**3) / 3 + r**4 / 4,
            lambda r: np.where(r == 0, np.nan, -(r**2) + r**3),
            lambda r: -2 * r + 3 * r**2,
            alpha=3,
            C=1,
            R=4 / 3,
        )
        with pytest.raises(DomainError):
            p.dw(0.0)


class TestCustomValidation:
    def test_accepts_valid(self):
        assert sextic().R == 0.5

    def test_wrong_radius(self):
        with pytest.raises(HypothesisError):
            RadialPotential.custom(
                lambda r: -(r**4) / 4 + r**6,
                lambda r: -(r**3) + 6 * r**5,
                lambda r: -3 * r**2 + 30 * r**4,
                alpha=4,
                C=1,
                R=0.7,
            )

    def test_wrong_constant(self):
        with pytest.raises(HypothesisError):
            RadialPotential.custom(
                lambda r: -(r**4) / 4 + r**6,
                lambda r: -(r**3) + 6 * r**5,
                lambda r: -3 * r**2 + 30 * r**4,
                alpha=4,
                C=2,
                R=0.5,
            )

    def test_alpha_at_most_two(self):
        with pytest.raises(HypothesisError):
            RadialPotential.custom(lambda r: r, lambda r: r, lambda r: r, alpha=2, C=1, R=1)


class TestConvexityRadius:
    def test_b4_closed_form(self):
        p = RadialPotential.power_law(8, 4)
        expected = (1.5 - 0.5 * math.sqrt(19 / 3)) ** 0.25
        assert pot.convexity_radius(p) == pytest.approx(expected, rel=1e-14)
        assert p.R == pytest.approx(2**0.25, rel=1e-15)

    @pytest.mark.parametrize("b", [2.5, 3, 4, 6, 10])
    def test_a_equals_2b_reduction(self, b):
        r_general = pot.convexity_radius_power_law(2 * b, b)
        r_reduced = (1.5 - 0.5 * math.sqrt((5 * b - 1) / (b - 1))) ** (1 / b)
        assert r_general == pytest.approx(r_reduced, rel=1e-12)

    def test_custom_matches_closed_form(self):
        p = custom_power_law(6.0, 3.0)
        assert pot.convexity_radius(p) == pytest.approx(pot.convexity_radius_power_law(6, 3), abs=1e-6)

    def test_sqrt_convexity_sign(self, pl63):
        # second differences of sqrt(-w) change sign at the convexity radius
        r = pot.convexity_radius(pl63)
        f = lambda x: math.sqrt(-pl63.w(x))  # noqa: E731
        h = 1e-3
        second = lambda x: f(x + h) - 2 * f(x) + f(x - h)  # noqa: E731
        assert second(r - 0.01) > 0 > second(r + 0.01)

    def test_violated_near_origin(self):
        # sqrt(-w) = r near 0 is not strictly convex
        p = RadialPotential.custom(
            lambda r: -(r**2) + r**3,
            lambda r: -2 * r + 3 * r**2,
            lambda r: -2 + 6 * r,
            alpha=2.5,
            C=1,
            R=1,
            validate=False,
        )
        with pytest.raises(HypothesisError):
            pot.convexity_radius_numeric(p)

    @given(st.floats(2.1, 8.0), st.floats(0.1, 6.0))
    @settings(max_examples=60, deadline=None)
    def test_at_most_R(self, b, gap):
        p = RadialPotential.power_law(b + gap, b)
        assert 0 < pot.convexity_radius(p) <= p.R


class TestSignStructure:
    @given(st.floats(2.1, 8.0), st.floats(0.1, 6.0))
    @settings(max_examples=60, deadline=None)
    def test_negative_exactly_inside(self, b, gap):
        p = RadialPotential.power_law(b + gap, b)
        r = np.linspace(0, 3 * p.R, 301)[1:]
        w = p.w(r)
        inside = r < p.R * (1 - 1e-9)
        outside = r > p.R * (1 + 1e-9)
        assert np.all(w[inside] < 0)
        assert np.all(w[outside] > 0)


class TestC4Bound:
    def test_alpha_three(self):
        c = pot.check_c4_bound(3.0)
        assert c.passed
        assert pot.c4_analytic_minimum(3.0) == (1.0, 0.0)

    def test_alpha_three_and_half(self):
        assert pot.check_c4_bound(3.5).passed

    def test_alpha_two_and_half(self):
        c = pot.check_c4_bound(2.5)
        assert not c.passed
        xi, f = pot.c4_analytic_minimum(2.5)
        assert xi == pytest.approx(6 / 7, rel=1e-15)
        assert f == pytest.approx(-6 / 7, rel=1e-15)
        assert float(pot.c4_profile(2.5, 6 / 7)) == pytest.approx(-6 / 7, rel=1e-12)

    def test_accepts_potential(self, pl63):
        assert pot.check_c4_bound(pl63).passed

    @pytest.mark.parametrize("alpha", [2.0, 4.0, 5.0])
    def test_domain(self, alpha):
        with pytest.raises(DomainError):
            pot.check_c4_bound(alpha)

    @given(st.floats(3.0, 3.999))
    @settings(max_examples=50, deadline=None)
    def test_nonnegative_regime(self, alpha):
        assert pot.check_c4_bound(alpha).passed

    @given(st.floats(2.001, 2.999))
    @settings(max_examples=50, deadline=None)
    def test_sharpness(self, alpha):
        assert not pot.check_c4_bound(alpha).passed


def test_config_round_trip(pl43):
    assert RadialPotential.from_config(pl43.to_config()) == pl43
    with pytest.raises(DomainError):
        RadialPotential.from_config({"kind": "morse"})
