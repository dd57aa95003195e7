from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from heatk.model_spaces import (
    SpaceDescriptor,
    alpha_beta,
    ball_constant,
    ball_heat_kernel,
    ball_measure_mass,
    ball_normalization,
    default_catalog,
    log_ball_heat_kernel,
    log_simplex_heat_kernel,
    log_symmetric_heat_kernel,
    log_symmetric_neg_derivative,
    simplex_constant,
    simplex_heat_kernel,
    simplex_measure_mass,
    simplex_normalization,
    symmetric_heat_kernel,
    symmetric_neg_derivative,
    unscale_kernel,
)
from heatk.specfun import DomainError

S1 = SpaceDescriptor("Sphere", 1)
S2 = SpaceDescriptor("Sphere", 2)
CAYLEY = SpaceDescriptor("CayleyPlane", 16)


class TestCatalog:
    @pytest.mark.parametrize(
        "family, d, dt",
        [("Sphere", 5, 0), ("RealProj", 4, 3), ("ComplexProj", 6, 4), ("QuatProj", 12, 8), ("CayleyPlane", 16, 8)],
    )
    def test_antipodal_dimension(self, family, d, dt):
        sp = SpaceDescriptor(family, d)
        assert sp.d_tilde == dt
        assert sp.d - sp.d_tilde in (sp.d, 1, 2, 4, 8)

    @pytest.mark.parametrize("family, d", [("ComplexProj", 5), ("QuatProj", 10), ("CayleyPlane", 8), ("RealProj", 1), ("Torus", 2)])
    def test_nonexistent(self, family, d):
        with pytest.raises(DomainError):
            SpaceDescriptor(family, d)

    def test_dictionary(self):
        assert (alpha_beta(S2).alpha, alpha_beta(S2).beta) == (0.0, 0.0)
        rp = alpha_beta(SpaceDescriptor("RealProj", 5))
        assert (rp.alpha, rp.beta) == (1.5, -0.5)
        cp = alpha_beta(CAYLEY)
        assert (cp.alpha, cp.beta) == (7.0, 3.0)

    def test_catalog_cone(self):
        cat = default_catalog()
        assert {sp.family for sp in cat} == {"Sphere", "RealProj", "ComplexProj", "QuatProj", "CayleyPlane"}
        for sp in cat:
            p = alpha_beta(sp)
            assert p.alpha >= p.beta >= -0.5
            assert (2 * p.beta) == int(2 * p.beta)
        by_d = {}
        for sp in cat:
            by_d.setdefault(sp.d, set()).add((alpha_beta(sp).alpha, alpha_beta(sp).beta))
        for sp in cat:
            assert len(by_d[sp.d]) == sum(1 for s in cat if s.d == sp.d)


class TestSymmetricKernel:
    def test_circle_theta_series(self):
        # 1 + 2 sum e^{-0.3 n^2} cos(0.7 n)
        assert symmetric_heat_kernel(S1, 0.7, 0.3) == pytest.approx(2.1511831901364468729, rel=1e-13)

    def test_sphere_frozen(self):
        assert symmetric_heat_kernel(S2, 1.0, 0.1) == pytest.approx(0.92586663967086760192, rel=1e-13)

    @pytest.mark.parametrize("space", default_catalog(), ids=lambda s: s.name)
    def test_long_time_constant(self, space):
        d = np.linspace(0, math.pi, 9)
        p = alpha_beta(space)
        gap = p.alpha + p.beta + 2
        dev = np.abs(symmetric_heat_kernel(space, d, 10.0) - 1.0)
        assert dev.max() < 1e-3
        assert dev.max() < 10 * symmetric_heat_kernel(space, 0.0, 1.0) * math.exp(-gap * 9.0) + 1e-15

    @pytest.mark.parametrize("space", default_catalog(), ids=lambda s: s.name)
    def test_probability(self, space):
        from heatk.quadrature import gauss_jacobi
        from heatk.specfun import jacobi_norm_h

        p = alpha_beta(space)
        x, w = gauss_jacobi(60, p.alpha, p.beta)
        vals = symmetric_heat_kernel(space, np.arccos(x), 0.05)
        assert float(w @ vals) / jacobi_norm_h(p, 0) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("space", default_catalog(), ids=lambda s: s.name)
    def test_maximum_at_zero(self, space):
        d = np.linspace(0, math.pi, 25)
        logs = log_symmetric_heat_kernel(space, d, 0.02)
        assert np.all(np.diff(logs) < 0)

    def test_log_matches_binary64(self):
        d = np.array([0.0, 0.5, 1.5])
        np.testing.assert_allclose(
            np.exp(log_symmetric_heat_kernel(CAYLEY, d, 0.3)), symmetric_heat_kernel(CAYLEY, d, 0.3), rtol=1e-10
        )

    def test_derivative_sign_and_endpoints(self):
        for space in default_catalog():
            inner = np.linspace(0, math.pi, 11)[1:-1]
            assert np.all(np.isfinite(log_symmetric_neg_derivative(space, inner, 0.05)))
            ends = symmetric_neg_derivative(space, np.array([0.0, math.pi]), 0.5)
            assert np.all(np.abs(ends) < 1e-10)

    def test_derivative_finite_difference(self):
        h = 1e-6
        for d in (0.4, 1.3, 2.8):
            fd = -(symmetric_heat_kernel(S2, d + h, 0.2) - symmetric_heat_kernel(S2, d - h, 0.2)) / (2 * h)
            assert symmetric_neg_derivative(S2, d, 0.2) == pytest.approx(fd, rel=1e-6)


class TestUnscale:
    def test_identity(self):
        assert unscale_kernel(S2, 1.0, 0.1, 1.0) == symmetric_heat_kernel(S2, 1.0, 0.1)

    def test_requires_volume(self):
        with pytest.raises(DomainError):
            unscale_kernel(S2, 1.0, 0.1, None)

    def test_doubled_diameter_quarters_time(self):
        big = SpaceDescriptor("Sphere", 2, diam=2 * math.pi)
        assert unscale_kernel(big, 2.0, 0.4, 1.0) == pytest.approx(symmetric_heat_kernel(S2, 1.0, 0.1), rel=1e-14)

    @given(st.floats(0.5, 4.0), st.floats(0.0, 1.0), st.floats(0.01, 1.0))
    def test_gaussian_exponent_invariant(self, diam, frac, t):
        k = math.pi / diam
        dist = frac * diam
        assert (dist * k) ** 2 / (4 * k * k * t) == pytest.approx(dist**2 / (4 * t), rel=1e-13)


class TestBall:
    def test_measure_mass(self):
        assert ball_measure_mass(0.5, 2) == pytest.approx(math.pi, rel=1e-15)
        val, _ = integrate.dblquad(lambda r, th: r * (1 - r * r) ** 0.5, 0, 2 * math.pi, 0, 1)
        assert ball_measure_mass(1.0, 2) == pytest.approx(val, rel=1e-10)

    def test_frozen(self):
        # mpmath: constant 1/2 times a quadrature of the Gegenbauer-type series
        assert ball_constant(0.5, 2) == pytest.approx(0.5, rel=1e-15)
        val = ball_heat_kernel(0.5, [0.1, 0.2], [0.5, -0.4], 0.05)
        assert val == pytest.approx(0.10793162499560443074, rel=1e-12)

    @pytest.mark.parametrize("mu, d", [(0.0, 2), (0.5, 3), (2.0, 2)])
    def test_normalization(self, mu, d):
        x = np.r_[0.3, -0.5, np.zeros(d - 2)]
        assert ball_normalization(mu, x, 0.1) == pytest.approx(1.0, abs=1e-8)

    def test_boundary_depends_on_distance_only(self):
        a, b, c = 0.3, 1.4, 2.2
        v1 = ball_heat_kernel(0.0, [math.cos(a), math.sin(a)], [math.cos(b), math.sin(b)], 0.1)
        v2 = ball_heat_kernel(0.0, [math.cos(a + c), math.sin(a + c)], [math.cos(b + c), math.sin(b + c)], 0.1)
        assert v1 == pytest.approx(v2, rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0, 0.99), st.floats(0, 6.3), st.floats(0, 0.99), st.floats(0, 6.3))
    def test_symmetric_positive(self, r1, a1, r2, a2):
        x = [r1 * math.cos(a1), r1 * math.sin(a1)]
        y = [r2 * math.cos(a2), r2 * math.sin(a2)]
        v = ball_heat_kernel(2.0, x, y, 0.2)
        assert v > 0
        assert v == pytest.approx(ball_heat_kernel(2.0, y, x, 0.2), rel=1e-12)

    def test_log_path(self):
        x, y = [0.1, 0.2], [0.5, -0.4]
        assert log_ball_heat_kernel(0.5, x, y, 0.05) == pytest.approx(math.log(0.10793162499560443074), abs=1e-12)

    def test_negative_mu(self):
        with pytest.raises(DomainError):
            ball_heat_kernel(-0.25, [0, 0], [0, 0], 0.1)


class TestSimplex:
    def test_measure_mass(self):
        # Dirichlet integral; for kappa = (1/2, 1/2, 1/2) the weight is 1 and U = area 1/2
        assert simplex_measure_mass([0.5, 0.5, 0.5]) == pytest.approx(0.5, rel=1e-15)

    def test_frozen(self):
        assert simplex_constant([0, 0, 1]) == pytest.approx(2 / math.pi, rel=1e-15)
        val = simplex_heat_kernel([0, 0, 1], [0.2, 0.3], [0.5, 0.1], 0.05)
        assert val == pytest.approx(0.285921325153608192, rel=1e-12)

    @pytest.mark.parametrize("kappa", [(0.0, 0.0, 0.0), (0.5, 0.5, 0.5), (1.0, 0.0, 2.0)])
    def test_normalization(self, kappa):
        assert simplex_normalization(kappa, (0.2, 0.7), 0.2) == pytest.approx(1.0, abs=1e-8)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_symmetric_positive(self, a, b, c, e):
        x = [a * b, a * (1 - b)]
        y = [c * e, c * (1 - e)]
        v = simplex_heat_kernel([1.0, 0.0, 2.0], x, y, 0.2)
        assert v > 0
        assert v == pytest.approx(simplex_heat_kernel([1.0, 0.0, 2.0], y, x, 0.2), rel=1e-12)

    @pytest.mark.parametrize("mu", [0.0, 0.5, 2.0])
    def test_ball_correspondence(self, mu):
        """With kappa = (0, ..., 0, mu) the simplex kernel is the reflection average of
        the ball kernel at a quarter of the time, under x -> sqrt(x)."""
        rng = np.random.default_rng(5)
        for _ in range(4):
            x = rng.dirichlet([2, 2, 2])[:2]
            y = rng.dirichlet([2, 2, 2])[:2]
            t = 0.12
            lhs = simplex_heat_kernel([0, 0, mu], x, y, t)
            refl = [
                ball_heat_kernel(mu, np.sqrt(x), np.array(sig) * np.sqrt(y), t / 4)
                for sig in itertools.product((1, -1), repeat=2)
            ]
            assert lhs == pytest.approx(np.mean(refl), rel=1e-6)

    def test_log_path(self):
        got = log_simplex_heat_kernel([0, 0, 1], [0.2, 0.3], [0.5, 0.1], 0.05, m=16)
        assert got == pytest.approx(math.log(0.285921325153608192), abs=1e-9)

    def test_bad_kappa(self):
        with pytest.raises(DomainError):
            simplex_heat_kernel([0.5, -0.1, 0.5], [0.2, 0.2], [0.2, 0.2], 0.1)
        with pytest.raises(DomainError):
            simplex_heat_kernel([0.5, 0.5], [0.2, 0.2], [0.2, 0.2], 0.1)
