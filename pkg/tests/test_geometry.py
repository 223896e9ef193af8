import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from mildrep import geometry as geo
from mildrep.potentials import DomainError, RadialPotential

alphas = st.floats(2.05, 20.0)


class TestEta0:
    @pytest.mark.parametrize("alpha", [2.5, 3, 4, 10])
    def test_endpoint(self, alpha):
        assert geo.eta0(alpha, 0.0, 0.0) == 0.0

    def test_midpoint_value(self):
        assert geo.eta0(4, 0.5, 0.0) == pytest.approx(-0.5, abs=1e-15)

    @pytest.mark.parametrize("alpha", [2.5, 3, 4, 8, 16])
    def test_midpoint_root_matches_gamma(self, alpha):
        root = brentq(lambda z: geo.eta0(alpha, 0.5, z), 0.0, 2.0, xtol=1e-15, rtol=1e-15)
        assert root == pytest.approx(geo.gamma_alpha(alpha) / 2, abs=1e-12)
        assert geo.boundary_zmag(alpha, 0.5) == pytest.approx(root, abs=1e-11)

    def test_matches_plain_formula(self, rng):
        s = rng.random(50)
        z = rng.random(50)
        plain = (s + z) ** 1.5 + (1 - s + z) ** 1.5 - 1
        np.testing.assert_allclose(geo.eta0(3, s, z), plain, rtol=1e-12, atol=1e-14)


class TestGamma:
    def test_alpha_four(self):
        assert geo.gamma_alpha(4) == pytest.approx(math.sqrt(2) - 1, rel=1e-15)

    def test_limits(self):
        assert 0 < geo.gamma_alpha(2 + 1e-9) < 1e-8
        assert geo.gamma_alpha(1e9) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("alpha", [2.0, 1.0])
    def test_domain(self, alpha):
        with pytest.raises(DomainError):
            geo.gamma_alpha(alpha)


class TestBoundary:
    def test_endpoints_and_midpoint(self):
        curve = geo.boundary_curve(4, 101)
        assert curve[0] == (0.0, 0.0)
        assert curve[-1] == (1.0, 0.0)
        assert curve[50][1] == pytest.approx((math.sqrt(2) - 1) / 2, abs=1e-11)

    @pytest.mark.parametrize("alpha", [2.5, 3, 4, 10])
    def test_symmetric(self, alpha):
        z = np.array([c[1] for c in geo.boundary_curve(alpha, 201)])
        np.testing.assert_allclose(z, z[::-1], atol=1e-10)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            geo.boundary_curve(3, 1)

    def test_csv_round_trip(self, tmp_path):
        curve = geo.boundary_curve(3.5, 17)
        path = tmp_path / "b.csv"
        geo.write_boundary_csv(path, 3.5, curve)
        alpha, back = geo.read_boundary_csv(path)
        assert alpha == 3.5
        assert back == curve

    @pytest.mark.parametrize("alpha", [3, 4, 10])
    def test_tangent_angle(self, alpha):
        assert geo.tangent_angle_check(alpha) == pytest.approx(math.pi / 4, abs=1e-3)


class TestMembership:
    v = np.array([0.0, 0.0])
    v2 = np.array([2.0, 0.0])

    def shape(self, alpha=4.0):
        return geo.ExclusionShape(alpha, self.v, self.v2)

    def test_midpoint_inside(self):
        assert self.shape().contains([1.0, 0.0])

    def test_generator_outside(self):
        assert not self.shape().contains(self.v)
        assert not self.shape().contains(self.v2)

    def test_off_axis_at_root(self):
        sh = self.shape()
        L = 2.0
        assert sh.contains([1.0, 0.99 * sh.gamma / 2 * L])
        assert not sh.contains([1.0, 1.01 * sh.gamma / 2 * L])

    def test_beyond_segment(self):
        assert not self.shape().contains([-0.1, 0.0])
        assert not self.shape().contains([2.1, 0.0])

    def test_vectorized(self):
        out = self.shape().contains(np.array([[1.0, 0.0], [5.0, 5.0]]))
        np.testing.assert_array_equal(out, [True, False])

    def test_degenerate_pair(self):
        with pytest.raises(DomainError):
            geo.ExclusionShape(3, [1.0, 1.0], [1.0, 1.0])

    def test_cone(self):
        theta = 0.3
        assert geo.in_double_cone(theta, self.v, self.v2, [1.0, 0.0])
        assert not geo.in_double_cone(theta, self.v, self.v2, self.v)
        # distance to the line equal to theta * min(|proj - v|, |proj - v2|), measured on the unit scale
        v, v2 = np.zeros(2), np.array([1.0, 0.0])
        assert not geo.in_double_cone(0.5, v, v2, [0.25, 0.125])
        assert geo.in_double_cone(0.5, v, v2, [0.25, 0.124])


class TestShapeProperties:
    @given(alphas, st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    @settings(max_examples=300, deadline=None)
    def test_convex(self, alpha, s1, f1, s2, f2):
        # pick points strictly below the boundary, signed in z
        z1 = f1 * geo.boundary_zmag(alpha, s1)
        z2 = -f2 * geo.boundary_zmag(alpha, s2)
        if geo.eta0(alpha, s1, abs(z1)) >= 0 or geo.eta0(alpha, s2, abs(z2)) >= 0:
            return
        sm, zm = (s1 + s2) / 2, (z1 + z2) / 2
        assert geo.eta0(alpha, sm, abs(zm)) < 1e-12

    @given(alphas, st.floats(0.0, 0.999), st.floats(1e-6, 1 - 1e-6), st.floats(0, 0.999))
    @settings(max_examples=300, deadline=None)
    def test_cone_inside_shape(self, alpha, shrink, t, frac):
        theta = shrink * geo.gamma_alpha(alpha)
        z = frac * theta * min(t, 1 - t)
        u = [t, z]
        assert geo.in_double_cone(theta, [0, 0], [1, 0], u) == (z < theta * min(t, 1 - t))
        if geo.in_double_cone(theta, [0, 0], [1, 0], u):
            assert geo.in_exclusion_shape(geo.ExclusionShape(alpha, [0, 0], [1, 0]), u)

    @given(alphas, st.floats(1.001, 3.0))
    @settings(max_examples=100, deadline=None)
    def test_cone_sharpness(self, alpha, grow):
        theta = grow * geo.gamma_alpha(alpha)
        # cone point at s = 1/2 just inside the wider cone but outside the shape
        u = [0.5, 0.5 * (1 + grow) / 2 * geo.gamma_alpha(alpha)]
        assert geo.in_double_cone(theta, [0, 0], [1, 0], u)
        assert not geo.in_exclusion_shape(geo.ExclusionShape(alpha, [0, 0], [1, 0]), u)

    @given(
        alphas,
        st.integers(0, 2**32 - 1),
        st.floats(0.01, 100.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_similarity_equivariance(self, alpha, seed, scale):
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        shift = rng.normal(size=3)
        v, v2 = rng.normal(size=3), rng.normal(size=3)
        u = (v + v2) / 2 + 0.3 * rng.normal(size=(20, 3))
        before = geo.ExclusionShape(alpha, v, v2).contains(u)
        f = lambda x: scale * (x @ q.T) + shift  # noqa: E731
        after = geo.ExclusionShape(alpha, f(v), f(v2)).contains(f(u))
        # points within rounding of the boundary may flip; there are none generically
        t, s, z = geo.reduced_coordinates(v, v2, u)
        margin = np.abs(geo.eta0(alpha, np.clip(s, 0, 1), z)) > 1e-9
        np.testing.assert_array_equal(before[margin], after[margin])


def test_eta_p_converges_to_eta0():
    p = RadialPotential.power_law(6, 3)
    s = np.linspace(0.05, 0.95, 10)
    z = np.full_like(s, 0.1)
    target = geo.eta0(3, s, z)
    errs = [np.max(np.abs(geo.eta_p(p, scale, s, z) - target)) for scale in (1e-1, 1e-2, 1e-3)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3
