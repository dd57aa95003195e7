"""Acceptance gate: every criterion at its stated tolerance and time budget.

Each test collects all of its sub-checks before asserting, so a failing
criterion reports every violated condition. A summary line per criterion is
printed at the end of the session.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from heatk import verify as V
from heatk.envelopes import lemma_f7_pair
from heatk.sweeps import RATIO_CEILING, default_spec, refinement_stability, run_ratio_sweep


def _note(record_property, text: str) -> None:
    record_property("note", text)


def _finish(failures: list[str], record_property) -> None:
    for f in failures:
        _note(record_property, f)
    assert not failures, "\n".join(failures)


def _check(results, failures):
    for r in results:
        if not r.passed:
            failures.append(f"{r.name}: residual {r.max_residual:.3g} >= {r.threshold:g}")


@pytest.mark.criterion(1, "identity suite: reduction, quadratic transformations, derivative, comparison")
def test_identity_suite(record_property):
    start = time.perf_counter()
    results = [V.reduction_residuals(), *V.qiden_residuals(), V.derivative_residuals(), V.comparison_residuals()]
    elapsed = time.perf_counter() - start
    failures: list[str] = []
    _check(results, failures)
    assert [r.threshold for r in results] == [1e-7, 1e-8, 1e-8, 1e-5, 1e-12]
    if elapsed >= 60:
        failures.append(f"runtime {elapsed:.1f} s >= 60 s")
    _finish(failures, record_property)


@pytest.mark.criterion(2, "normalization and semigroup; ball and simplex normalization")
def test_stochastic_structure(record_property):
    start = time.perf_counter()
    results = [V.normalization_residuals(), V.semigroup_residuals(), V.ball_simplex_normalization_residuals()]
    elapsed = time.perf_counter() - start
    failures: list[str] = []
    _check(results, failures)
    assert [r.threshold for r in results] == [1e-8, 1e-7, 1e-6]
    if elapsed >= 120:
        failures.append(f"runtime {elapsed:.1f} s >= 120 s")
    _finish(failures, record_property)


@pytest.mark.criterion(3, "sharp-envelope ratios bounded (< 1e4) and stable under grid doubling")
def test_envelope_ratio_suites(record_property):
    start = time.perf_counter()
    failures: list[str] = []
    for target in ("jacobi", "symmetric", "ball", "simplex"):
        st = refinement_stability(default_spec(target))
        for rep in (st.base, st.fine):
            if rep.failures:
                failures.append(f"{target}: {len(rep.failures)} failed cells")
            for group, spread in rep.group_spreads.items():
                if not (math.isfinite(spread) and spread < RATIO_CEILING):
                    failures.append(f"{target} {group}: max/min ratio {spread:.3g} (grid {rep.grid_size})")
        if not (st.min_change < 0.2 and st.max_change < 0.2):
            failures.append(f"{target}: refinement change {st.min_change:.3g}/{st.max_change:.3g}")
    elapsed = time.perf_counter() - start
    if elapsed >= 600:
        failures.append(f"runtime {elapsed:.1f} s >= 600 s")
    # one message per (target, group) is enough
    _finish(sorted(set(failures)), record_property)


@pytest.mark.criterion(4, "technical lemmas: bounded, stable, exact slices")
def test_technical_lemmas(record_property):
    start = time.perf_counter()
    failures: list[str] = []
    for target in ("lemma21", "lemma22"):
        st = refinement_stability(default_spec(target))
        if not st.ok:
            failures.append(
                f"{target}: spreads {max(st.fine.group_spreads.values()):.3g}, "
                f"change {st.min_change:.3g}/{st.max_change:.3g}, failures {len(st.fine.failures)}"
            )
        if target == "lemma21":
            rep = st.base
    recs = rep.records
    b0 = np.array([math.exp(r["log_ratio"]) for r in recs if r["B"] == 0.0])
    nu_half = np.array([math.exp(r["log_ratio"]) for r in recs if r["nu"] == -0.5])
    if not np.allclose(b0, 1.0, rtol=1e-12, atol=0):
        failures.append(f"B=0 slice ratio in [{b0.min():.15g}, {b0.max():.15g}], expected 1")
    if not np.allclose(nu_half, 0.5, rtol=1e-12, atol=0):
        failures.append(f"nu=-1/2 slice ratio in [{nu_half.min():.15g}, {nu_half.max():.15g}], expected 1/2")
    for gamma in (-0.5, 0.0, 1.0, 3.0):
        for a in np.linspace(0.0, 5.0, 11):
            if lemma_f7_pair(gamma, float(a), float(a)) != (0.0, 0.0):
                failures.append(f"b=a slice not 0=0 at gamma={gamma}, a={a}")
    elapsed = time.perf_counter() - start
    if elapsed >= 60:
        failures.append(f"runtime {elapsed:.1f} s >= 60 s")
    _finish(failures, record_property)


@pytest.mark.criterion(5, "Gaussian exponent: 4t|log G|/dist^2 (t|log H|/dist^2 on the simplex) within 5% of 1")
def test_gaussian_exponent(record_property):
    start = time.perf_counter()
    failures: list[str] = []
    jac = V.run_varadhan_check("jacobi", (0.0, 0.0, 2.0, 0.0), (1e-2, 3e-3, 1e-3))
    if not abs(jac.final - 1) < 0.05:
        failures.append(f"jacobi estimate {jac.final:.5f}")
    for kappa in ((0.0, 0.0, 0.0), (0.5, 0.5, 0.5), (1.0, 0.0, 2.0)):
        sx = V.run_varadhan_check("simplex", (kappa, (0.7, 0.1), (0.1, 0.7)), (1e-2, 3e-3, 1e-3))
        assert sx.divisor == 1.0
        if not abs(sx.final - 1) < 0.05:
            failures.append(f"simplex {kappa} estimate {sx.final:.5f}")
    elapsed = time.perf_counter() - start
    if elapsed >= 30:
        failures.append(f"runtime {elapsed:.1f} s >= 30 s")
    _finish(failures, record_property)


@pytest.mark.criterion(6, "long-time regime: monotone decay, deviation < 10 e^{-t(a+b+2)}")
def test_long_time(record_property):
    res = V.long_time_deviation(bound=10.0)
    failures = []
    if not res.passed:
        failures.append(f"worst constant {res.max_residual:.4g} at {res.detail['worst']}")
    _finish(failures, record_property)


@pytest.mark.criterion(7, "monotonicity in the distance for every catalogued space")
def test_monotonicity(record_property):
    res = V.monotonicity_check(times=(0.05, 0.5, 2.0))
    failures = []
    if not res.passed:
        failures.append(f"residual {res.max_residual:.3g} at {res.detail}")
    _finish(failures, record_property)
