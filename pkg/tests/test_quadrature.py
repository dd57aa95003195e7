from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from heatk.quadrature import (
    TensorRule,
    gauss_jacobi,
    gauss_jacobi_rule,
    graded_rule,
    half_rule,
    integrate_half,
    integrate_pi,
    integrate_tensor,
    pi_density_constant,
)
from heatk.specfun import DomainError

nu_st = st.sampled_from([-0.5, -0.4, 0.0, 0.5, 1.0, 3.0])


def pi_moment(nu: float, k: int) -> float:
    """int w^k dPi_nu; the reference Beta-function ratio."""
    if k % 2:
        return 0.0
    if nu == -0.5:
        return 1.0
    return math.exp(special.betaln((k + 1) / 2, nu + 0.5) - special.betaln(0.5, nu + 0.5))


class TestGaussJacobi:
    def test_matches_scipy_roots(self):
        for a, b in [(0.0, 0.0), (1.5, -0.5), (-0.7, 2.0)]:
            x, w = gauss_jacobi(20, a, b)
            xr, wr = special.roots_jacobi(20, a, b)
            np.testing.assert_allclose(x, xr, atol=1e-14)
            np.testing.assert_allclose(w, wr, rtol=1e-12)

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            gauss_jacobi(0, 0.0, 0.0)


class TestPiRule:
    def test_single_point(self):
        r = gauss_jacobi_rule(1.0, 1)
        assert r.nodes.tolist() == [0.0]
        assert r.weights.tolist() == pytest.approx([1.0])

    def test_atomic(self):
        r = gauss_jacobi_rule(-0.5, 17)
        assert r.nodes.tolist() == [-1.0, 1.0]
        assert r.weights.tolist() == [0.5, 0.5]

    @settings(max_examples=30, deadline=None)
    @given(nu_st, st.integers(1, 80))
    def test_structure(self, nu, m):
        r = gauss_jacobi_rule(nu, m)
        assert abs(r.weights.sum() - 1) < 1e-12
        assert np.all(np.diff(r.nodes) > 0)
        np.testing.assert_array_equal(r.nodes, -r.nodes[::-1])
        np.testing.assert_array_equal(r.weights, r.weights[::-1])
        assert np.all(r.weights > 0)

    def test_second_moment_reference(self):
        val, _ = integrate.quad(lambda w: pi_density_constant(0.5) * w * w, -1, 1)
        assert val == pytest.approx(1 / 3, rel=1e-12)
        assert integrate_pi(lambda w: w**2, 0.5, 4) == pytest.approx(1 / 3, rel=1e-14)
        assert integrate_pi(lambda w: w**2, 1.0, 4) == pytest.approx(1 / 4, rel=1e-14)

    @pytest.mark.parametrize("nu", [-0.4, 0.0, 0.5, 1.0, 3.0])
    def test_exactness(self, nu):
        r = gauss_jacobi_rule(nu, 12)
        for k in range(24):
            got = r.integrate(lambda w: w**k)
            ref = pi_moment(nu, k)
            assert got == pytest.approx(ref, rel=1e-12, abs=1e-15)

    @given(st.floats(-10, 10), nu_st)
    def test_constant_and_odd(self, c, nu):
        assert integrate_pi(lambda w: c + 0 * w, nu, 9) == pytest.approx(c, rel=1e-13, abs=1e-15)
        assert abs(integrate_pi(lambda w: w, nu, 9)) < 1e-15

    def test_atomic_second_moment(self):
        assert integrate_pi(lambda w: w**2, -0.5) == 1.0

    @pytest.mark.parametrize("nu", [0.0, 1.0, 2.5])
    def test_convergence(self, nu):
        f = lambda w: np.exp(-np.arccos(0.3 + 0.5 * w) ** 2)  # noqa: E731
        for m in (40, 64):
            assert abs(integrate_pi(f, nu, m) - integrate_pi(f, nu, 2 * m)) < 1e-10

    def test_rejects_bad_input(self):
        with pytest.raises(DomainError):
            gauss_jacobi_rule(-0.6, 4)
        with pytest.raises(DomainError):
            gauss_jacobi_rule(0.5, 0)


class TestHalfRule:
    @pytest.mark.parametrize("nu", [-0.3, 0.0, 0.5, 2.0])
    def test_against_adaptive(self, nu):
        f = lambda w: np.exp(-3 * w) * np.cos(w)  # noqa: E731
        c = pi_density_constant(nu)
        ref, _ = integrate.quad(
            lambda w: c * math.exp(-3 * w) * math.cos(w) * (1 + w) ** (nu - 0.5),
            0,
            1,
            weight="alg",
            wvar=(0, nu - 0.5),
            epsabs=0,
            epsrel=1e-13,
        )
        assert integrate_half(f, nu, 40) == pytest.approx(ref, rel=1e-9)

    def test_half_mass(self):
        for nu in (0.0, 0.7, 4.0):
            assert half_rule(nu, 20).weights.sum() == pytest.approx(0.5, rel=1e-13)

    def test_atomic_keeps_one_atom(self):
        r = half_rule(-0.5, 10)
        assert r.nodes.tolist() == [1.0] and r.weights.tolist() == [0.5]


class TestGradedRule:
    @pytest.mark.parametrize("lower", [-1.0, 0.0])
    @pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 2.5])
    def test_mass_and_gaps(self, nu, lower):
        r = graded_rule(nu, 1e-4, lower=lower)
        expected = 1.0 if lower == -1.0 else 0.5
        assert r.weights.sum() == pytest.approx(expected, rel=1e-12)
        np.testing.assert_allclose(1.0 - r.gaps, r.nodes, atol=1e-16)

    @pytest.mark.parametrize("nu", [0.0, 1.5])
    def test_resolves_peak(self, nu):
        eps = 1e-6
        f = lambda w: np.exp(-(1 - w) / eps)  # noqa: E731
        r = graded_rule(nu, eps)
        got = float(np.dot(r.weights, np.exp(-r.gaps / eps)))
        c = pi_density_constant(nu)
        ref, _ = integrate.quad(
            lambda g: c * math.exp(-g / eps) * (g * (2 - g)) ** (nu - 0.5),
            0,
            2,
            points=[eps, 10 * eps, 100 * eps],
            limit=400,
            epsabs=0,
            epsrel=1e-12,
        )
        assert got == pytest.approx(ref, rel=1e-10)
        assert f(1.0) == 1.0

    def test_rejects_other_intervals(self):
        with pytest.raises(DomainError):
            graded_rule(0.0, 0.1, lower=0.5)


class TestTensor:
    def test_constant(self):
        rules = [gauss_jacobi_rule(0.5, 5), gauss_jacobi_rule(-0.5, 1), gauss_jacobi_rule(2.0, 3)]
        assert integrate_tensor(lambda u: np.ones(len(u)), rules) == pytest.approx(1.0, rel=1e-13)
        _, w = TensorRule(tuple(rules)).grid()
        assert abs(w.sum() - 1) < 1e-10

    def test_odd_coordinate(self):
        rules = [gauss_jacobi_rule(0.5, 5), gauss_jacobi_rule(1.0, 5)]
        assert abs(integrate_tensor(lambda u: u[:, 0], rules)) < 1e-15

    def test_product_of_moments(self):
        rules = [gauss_jacobi_rule(0.5, 6), gauss_jacobi_rule(0.5, 6)]
        val = integrate_tensor(lambda u: u[:, 0] ** 2 * u[:, 1] ** 2, rules)
        assert val == pytest.approx(1 / 9, rel=1e-13)

    def test_atoms_contribute_two_points(self):
        pts, w = TensorRule((gauss_jacobi_rule(-0.5, 9), gauss_jacobi_rule(-0.5, 9))).grid()
        assert pts.shape == (4, 2)
        assert w.tolist() == [0.25] * 4

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            TensorRule(())
