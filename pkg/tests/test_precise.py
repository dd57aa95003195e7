from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatk import precise
from heatk.jacobi_kernel import heat_kernel
from heatk.quadrature import gauss_jacobi_rule
from heatk.specfun import DomainError, JacobiParams

P00 = JacobiParams(0.0, 0.0)


class TestLogKernel:
    def test_deep_tail_legendre(self):
        # mpmath Legendre series at 600 digits
        got = precise.log_kernel(P00, math.cos(2.0), 1.0, 1e-3)
        assert got == pytest.approx(-993.39090705600041489, rel=1e-13)

    def test_deep_tail_off_endpoint(self):
        got = precise.log_kernel(P00, math.cos(3.0), math.cos(0.5), 1e-2)
        assert got == pytest.approx(-153.85472465989062138, rel=1e-13)

    @settings(max_examples=25, deadline=None)
    @given(
        st.sampled_from([(-0.7, 0.2), (0.0, 0.0), (1.0, 2.5), (7.0, 3.0)]),
        st.floats(-1, 1),
        st.floats(-1, 1),
        st.floats(0.05, 2.0),
    )
    def test_agrees_with_binary64_where_resolved(self, ab, x, y, t):
        p = JacobiParams(*ab)
        g = heat_kernel(p, x, y, t)
        if g > 1e-8 * heat_kernel(p, 1.0, 1.0, t):
            assert math.exp(precise.log_kernel(p, x, y, t)) == pytest.approx(g, rel=1e-7)

    def test_matrix_matches_pointwise(self):
        p = JacobiParams(0.5, -0.5)
        xs = np.cos(np.linspace(0, math.pi, 5))
        ys = np.cos(np.linspace(0.2, 2.9, 3))
        mat = precise.log_kernel_matrix(p, xs, ys, 0.01)
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                assert mat[i, j] == pytest.approx(precise.log_kernel(p, x, y, 0.01), rel=1e-13, abs=1e-12)

    def test_at_one_matches_general(self):
        p = JacobiParams(2.5, 0.0)
        xs = np.cos(np.array([0.0, 0.7, 2.0, math.pi]))
        a = precise.log_kernel_at_one(p, xs, 0.003)
        b = precise.log_kernel_matrix(p, xs, [1.0], 0.003)[:, 0]
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_positive_everywhere(self):
        # finite logs mean resolved, strictly positive values
        for ab in [(-0.5, -0.5), (2.5, 2.5), (-0.7, 0.2)]:
            xs = np.cos(np.linspace(0, math.pi, 9))
            vals = precise.log_kernel_matrix(JacobiParams(*ab), xs, xs, 1e-3)
            assert np.all(np.isfinite(vals))

    def test_varadhan_limit(self):
        lg = precise.log_kernel(P00, math.cos(2.0), 1.0, 1e-4)
        assert 4e-4 * abs(lg) / 4.0 == pytest.approx(1.0, abs=2e-3)

    def test_rejects_bad_arguments(self):
        with pytest.raises(DomainError):
            precise.log_kernel(P00, 1.5, 0.0, 0.1)
        with pytest.raises(DomainError):
            precise.log_kernel(P00, 0.0, 0.0, 0.0)


class TestEndpointTable:
    def test_interpolation_accuracy(self):
        p = JacobiParams(1.0, 0.0)
        tab = precise.EndpointTable(p, 0.01)
        tab.ensure(math.pi)
        th = np.array([0.013, 0.5, 1.234, 2.5, 3.0, math.pi - 1e-3])
        direct = precise.log_kernel_at_one(p, np.cos(th), 0.01)
        np.testing.assert_allclose(tab.log_value(th), direct, rtol=1e-11, atol=1e-10)

    def test_lazy_range(self):
        tab = precise.EndpointTable(P00, 0.02)
        tab.ensure(0.4)
        assert 0.4 <= tab.covered < math.pi
        assert tab.log_value(np.array([3.0]))[0] == -math.inf

    def test_cache_is_shared(self):
        assert precise.endpoint_table(P00, 0.123) is precise.endpoint_table(P00, 0.123)


class TestLinearIntegral:
    def test_no_coordinates(self):
        tab = precise.endpoint_table(P00, 0.05)
        got = precise.log_integral_linear(tab, 0.3, [], [])
        assert got == pytest.approx(float(tab.log_value(math.acos(0.7))), rel=1e-14)

    def test_zero_coefficient_gives_mass(self):
        tab = precise.endpoint_table(P00, 0.05)
        a = precise.log_integral_linear(tab, 0.3, [0.0], [1.0])
        b = precise.log_integral_linear(tab, 0.3, [0.0], [1.0], lowers=[0.0])
        assert a == pytest.approx(b + math.log(2), rel=1e-13)

    def test_against_plain_gauss(self):
        p = JacobiParams(0.5, 0.5)
        t = 0.2
        tab = precise.endpoint_table(p, t)
        r = gauss_jacobi_rule(1.0, 60)
        gap0, c = 0.1, 0.4
        ref = float(np.dot(r.weights, heat_kernel(p, 1 - gap0 - c * (1 - r.nodes), 1.0, t)))
        got = precise.log_integral_linear(tab, gap0, [c], [1.0])
        assert math.exp(got) == pytest.approx(ref, rel=1e-9)

    def test_negative_coefficient_rejected(self):
        with pytest.raises(DomainError):
            precise.log_integral_linear(precise.endpoint_table(P00, 0.05), 0.1, [-0.1], [0.0])
