"""Residual checks of the exact identities, and the Gaussian-exponent check.

Each check evaluates both sides of a relation on a built-in grid and reports
the worst residual against a threshold. Checks that compare values deep in
the Gaussian tail use the extended-precision engine, because a binary64
series only resolves absolute errors of order eps * G_t(1, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import precise
from .jacobi_kernel import (
    DEFAULT_TOL,
    heat_kernel,
    quadratic_transform_pair,
    reduction_constant,
    truncation_order,
)
from .model_spaces import (
    SpaceDescriptor,
    alpha_beta,
    ball_normalization,
    default_catalog,
    log_ball_heat_kernel,
    log_simplex_heat_kernel,
    log_symmetric_heat_kernel,
    log_symmetric_neg_derivative,
    symmetric_neg_derivative,
)
from .geometry import ball_gaps, dist_simplex, simplex_gap, angle_from_gap
from .quadrature import gauss_jacobi
from .specfun import DomainError, JacobiParams, jacobi_norm_h

__all__ = [
    "IDENTITIES",
    "IdentityResult",
    "VaradhanReport",
    "run_identity_checks",
    "run_varadhan_check",
    "log_reduced_kernel",
    "comparison_margins",
    "reduction_residuals",
    "qiden_residuals",
    "derivative_residuals",
    "comparison_residuals",
    "semigroup_residuals",
    "normalization_residuals",
    "ball_simplex_normalization_residuals",
    "symmetry_residuals",
    "long_time_deviation",
    "monotonicity_check",
]

IDENTITIES = (
    "reduction",
    "qiden1",
    "qiden2",
    "derivative",
    "comparison",
    "semigroup",
    "normalization",
    "symmetry",
    "long_time",
    "monotonicity",
)

PARAMS_4 = tuple((a, b) for a in (-0.5, 0.0, 0.5, 1.0) for b in (-0.5, 0.0, 0.5, 1.0))
PARAMS_5 = tuple((a, b) for a in (-0.5, 0.0, 0.5, 1.0, 2.5) for b in (-0.5, 0.0, 0.5, 1.0, 2.5))
IDENTITY_TIMES = (0.05, 0.2, 1.0)


@dataclass(frozen=True)
class IdentityResult:
    name: str
    max_residual: float
    threshold: float
    checked: int
    skipped: int = 0
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return math.isfinite(self.max_residual) and self.max_residual < self.threshold


def _rel(log_a, log_b):
    """|a/b - 1| from logs."""
    return np.abs(np.expm1(np.asarray(log_a) - np.asarray(log_b)))


# ---------------------------------------------------------------------------
# reduction formula


def log_reduced_kernel(alpha: float, beta: float, phi: float, psi: float, t: float, *, m: int = 16) -> float:
    """log G_t^{a,b}(cos phi, cos psi) through the reduction formula, in extended precision.

    The argument u sin(phi/2) sin(psi/2) + v cos(phi/2) cos(psi/2) equals
    1 - [2 sin^2((phi-psi)/4) + (1-u) S + (1-v) C], which is the form the
    graded integrator expects.
    """
    if alpha < -0.5 or beta < -0.5:
        raise DomainError("the reduction formula needs alpha, beta >= -1/2")
    lam = alpha + beta + 0.5
    S = math.sin(phi / 2) * math.sin(psi / 2)
    C = math.cos(phi / 2) * math.cos(psi / 2)
    gap0 = 2 * math.sin((phi - psi) / 4) ** 2
    table = precise.endpoint_table(JacobiParams(lam, lam), t / 4)
    return math.log(reduction_constant(alpha, beta)) + precise.log_integral_linear(
        table, gap0, [S, C], [alpha, beta], m=m
    )


def reduction_residuals(params=PARAMS_4, n_angles: int = 10, times=IDENTITY_TIMES) -> IdentityResult:
    phis = np.linspace(0.0, math.pi, n_angles)
    worst, count, where = 0.0, 0, {}
    for a, b in params:
        for t in times:
            lhs = precise.log_kernel_matrix(JacobiParams(a, b), np.cos(phis), np.cos(phis), t)
            for i, phi in enumerate(phis):
                for j, psi in enumerate(phis):
                    r = float(_rel(log_reduced_kernel(a, b, phi, psi, t), lhs[i, j]))
                    count += 1
                    if r > worst:
                        worst, where = r, {"alpha": a, "beta": b, "phi": phi, "psi": psi, "t": t}
    return IdentityResult("reduction", worst, 1e-7, count, detail=where)


# ---------------------------------------------------------------------------
# quadratic transformations


def qiden_residuals(alphas=(-0.7, -0.5, 0.0, 0.5, 1.5), n: int = 9, times=IDENTITY_TIMES):
    xs = np.linspace(-1.0, 1.0, n)
    w1 = w2 = 0.0
    c1 = c2 = skipped = 0
    for a in alphas:
        for t in times:
            for x in xs:
                for y in xs:
                    r1, r2 = quadratic_transform_pair(a, x, y, t)
                    w1 = max(w1, abs(r1))
                    c1 += 1
                    if r2 is None:
                        skipped += 1
                    else:
                        w2 = max(w2, abs(r2))
                        c2 += 1
    return (
        IdentityResult("qiden1", w1, 1e-8, c1),
        IdentityResult("qiden2", w2, 1e-8, c2, skipped=skipped),
    )


# ---------------------------------------------------------------------------
# derivative identity


def derivative_residuals(params=PARAMS_4, n: int = 10, times=IDENTITY_TIMES, h: float = 1e-5) -> IdentityResult:
    """Central differences of log-accurate values against the closed-form derivative.

    d/dx G_t^{a,b}(x, 1) = 2 (a+1) e^{-t(a+b+2)} G_t^{a+1,b+1}(x, 1); the differences
    are formed from extended-precision logs so they stay meaningful where G is tiny.
    """
    xs = np.cos(np.linspace(0.0, math.pi, n)[1:-1])
    worst, count, where = 0.0, 0, {}
    for a, b in params:
        p = JacobiParams(a, b)
        for t in times:
            lp = precise.log_kernel_at_one(p, xs + h, t)
            lm = precise.log_kernel_at_one(p, xs - h, t)
            ld = math.log(2 * (a + 1)) - t * (a + b + 2) + precise.log_kernel_at_one(p.shifted(), xs, t)
            fd = (np.exp(lp - ld) - np.exp(lm - ld)) / (2 * h)
            r = np.abs(fd - 1.0)
            count += r.size
            k = int(np.argmax(r))
            if r[k] > worst:
                worst, where = float(r[k]), {"alpha": a, "beta": b, "x": float(xs[k]), "t": t}
    return IdentityResult("derivative", worst, 1e-5, count, detail=where)


# ---------------------------------------------------------------------------
# comparison principle


def comparison_margins(alpha: float, beta: float, delta: float, xs, ys, t: float, slack: float = 1e-12) -> np.ndarray:
    """log(rhs + slack) - log(lhs) on the grid; the inequality holds where this is >= 0."""
    if delta < 0 or beta < -delta / 2:
        raise DomainError("need delta >= 0 and beta >= -delta/2")
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    rhs = delta * (alpha + beta + 1 + delta / 2) * t / 2 + precise.log_kernel_matrix(JacobiParams(alpha, beta), xs, ys, t)
    if delta == 0:
        weight = np.zeros((xs.size, ys.size))
    else:
        with np.errstate(divide="ignore"):
            weight = 0.5 * delta * np.log(np.outer(1 + xs, 1 + ys))
    lhs = weight + precise.log_kernel_matrix(JacobiParams(alpha, beta + delta), xs, ys, t)
    return np.logaddexp(rhs, math.log(slack)) - lhs


def comparison_residuals(
    alphas=(-0.5, 0.0, 1.0), betas=(-0.5, 0.0, 1.0), deltas=(0.0, 1.0, 2.0), n: int = 7, times=IDENTITY_TIMES
) -> IdentityResult:
    """Residual is the largest violation (0 when the inequality holds everywhere)."""
    xs = np.cos(np.linspace(0.0, math.pi, n))
    worst, count, where = 0.0, 0, {}
    for a in alphas:
        for b in betas:
            for dl in deltas:
                if b < -dl / 2:
                    continue
                for t in times:
                    mg = comparison_margins(a, b, dl, xs, xs, t)
                    count += mg.size
                    viol = math.inf if np.isnan(mg).any() else float(max(0.0, -mg.min()))
                    if viol > worst:
                        worst, where = viol, {"alpha": a, "beta": b, "delta": dl, "t": t}
    # strict: any violation beyond rounding of the logs fails
    return IdentityResult("comparison", worst, 1e-12, count, detail=where)


# ---------------------------------------------------------------------------
# semigroup and normalisation


def semigroup_residuals(params=PARAMS_5, n: int = 6, times=(0.01, 0.05, 0.2)) -> IdentityResult:
    """int G_t(x,z) G_t(z,y) drho(z) = G_{2t}(x,y), relative residual.

    All values are extended-precision logs and the z-rule is a Gauss-Jacobi rule
    for drho whose order covers the degree of the product, so the quadrature is
    exact and the positive sum loses nothing to cancellation.
    """
    xs = np.cos(np.linspace(0.0, math.pi, n))
    worst, count, where = 0.0, 0, {}
    for a, b in params:
        p = JacobiParams(a, b)
        for t in times:
            deg = truncation_order(p, t, log_tol=-(math.pi**2) / (4 * t) - 80.0)
            z, wz = gauss_jacobi(deg + 2, a, b)
            left = precise.log_kernel_matrix(p, xs, z, t)
            both = left[:, :, None] + left.T[None, :, :] + np.log(wz)[None, :, None]
            lhs = np.logaddexp.reduce(both, axis=1)
            rhs = precise.log_kernel_matrix(p, xs, xs, 2 * t)
            r = _rel(lhs, rhs)
            count += r.size
            k = np.unravel_index(int(np.argmax(r)), r.shape)
            if r[k] > worst:
                worst, where = float(r[k]), {"alpha": a, "beta": b, "t": t, "x": float(xs[k[0]]), "y": float(xs[k[1]])}
    return IdentityResult("semigroup", worst, 1e-7, count, detail=where)


def normalization_residuals(params=PARAMS_5, n: int = 10, times=None) -> IdentityResult:
    """|int G_t(x, y) drho(y) - 1| with an exact Gauss-Jacobi rule for drho."""
    from .sweeps import log_grid

    times = times or log_grid(1e-3, 1.0, 6)
    xs = np.cos(np.linspace(0.0, math.pi, n))
    worst, count, where = 0.0, 0, {}
    for a, b in params:
        p = JacobiParams(a, b)
        for t in times:
            deg = truncation_order(p, t, DEFAULT_TOL)
            y, wy = gauss_jacobi(deg // 2 + 2, a, b)
            vals = heat_kernel(p, xs[:, None], y[None, :], t) @ wy
            r = np.abs(vals - 1.0)
            count += r.size
            k = int(np.argmax(r))
            if r[k] > worst:
                worst, where = float(r[k]), {"alpha": a, "beta": b, "t": t, "x": float(xs[k])}
    return IdentityResult("normalization", worst, 1e-8, count, detail=where)


def ball_simplex_normalization_residuals(times=(0.05, 0.2, 1.0)) -> IdentityResult:
    from .model_spaces import simplex_normalization

    worst, count, where = 0.0, 0, {}
    for d in (2, 3):
        for mu in (0.0, 0.5, 2.0):
            for x in (np.zeros(d), np.r_[0.3, -0.5, np.zeros(d - 2)], np.r_[1.0, np.zeros(d - 1)]):
                for t in times:
                    r = abs(ball_normalization(mu, x, t) - 1.0)
                    count += 1
                    if r > worst:
                        worst, where = r, {"space": "ball", "d": d, "mu": mu, "x": list(x), "t": t}
    for kappa in ((0.0, 0.0, 0.0), (0.5, 0.5, 0.5), (1.0, 0.0, 2.0)):
        for x in ((1 / 3, 1 / 3), (0.2, 0.7), (0.0, 0.0)):
            for t in times:
                r = abs(simplex_normalization(kappa, x, t) - 1.0)
                count += 1
                if r > worst:
                    worst, where = r, {"space": "simplex", "kappa": kappa, "x": list(x), "t": t}
    return IdentityResult("ball_simplex_normalization", worst, 1e-6, count, detail=where)


def symmetry_residuals(params=PARAMS_5, n: int = 9, times=IDENTITY_TIMES) -> IdentityResult:
    xs = np.linspace(-1.0, 1.0, n)
    worst, count = 0.0, 0
    for a, b in params:
        for t in times:
            g = heat_kernel(JacobiParams(a, b), xs[:, None], xs[None, :], t)
            worst = max(worst, float(np.max(np.abs(g - g.T)) / np.max(g)))
            count += g.size
    return IdentityResult("symmetry", worst, 1e-12, count)


# ---------------------------------------------------------------------------
# long-time regime


def long_time_deviation(params=PARAMS_4, times=(1.0, 2.0, 5.0), n: int = 21, bound: float = 10.0) -> IdentityResult:
    """max_{x,y} |G_t h_0 - 1| against bound * e^{-t(a+b+2)}, and monotone decay in t.

    The residual is the largest ratio deviation / e^{-t(a+b+2)}; a non-monotone
    parameter set is reported as an infinite residual.
    """
    xs = np.linspace(-1.0, 1.0, n)
    worst, count, where = 0.0, 0, {}
    constants = {}
    for a, b in params:
        p = JacobiParams(a, b)
        h0 = jacobi_norm_h(p, 0)
        devs = []
        for t in times:
            g = heat_kernel(p, xs[:, None], xs[None, :], t)
            dev = float(np.max(np.abs(g * h0 - 1.0)))
            devs.append(dev)
            c = dev / math.exp(-t * (a + b + 2))
            constants[f"({a:g},{b:g}) t={t:g}"] = c
            count += 1
            if c > worst:
                worst, where = c, {"alpha": a, "beta": b, "t": t, "deviation": dev}
        if any(d2 >= d1 for d1, d2 in zip(devs, devs[1:])):
            worst, where = math.inf, {"alpha": a, "beta": b, "non_monotone": devs}
    return IdentityResult("long_time", worst, bound, count, detail={"worst": where, "constants": constants})


# ---------------------------------------------------------------------------
# monotonicity in the distance


def monotonicity_check(spaces=None, times=(0.05, 0.5, 2.0), n: int = 24, vanish_tol: float = 1e-10) -> IdentityResult:
    """-d/d(dist) of the scaled kernel: positive inside (0, pi), below ``vanish_tol`` at 0 and pi.

    Interior signs come from extended-precision logs (a finite log means a
    resolved positive value); endpoint values use the binary64 closed form.
    The residual is 0 when every condition holds, otherwise the largest endpoint
    value or infinity for a non-positive interior value.
    """
    spaces = spaces or default_catalog()
    inner = np.linspace(0.0, math.pi, n)[1:-1]
    worst, count, where = 0.0, 0, {}
    for sp in spaces:
        for t in times:
            try:
                logs = log_symmetric_neg_derivative(sp, inner, t)
                good = np.all(np.isfinite(logs))
            except ArithmeticError:
                good = False
            count += inner.size
            if not good:
                worst, where = math.inf, {"space": sp.name, "t": t}
            ends = np.abs(symmetric_neg_derivative(sp, np.array([0.0, math.pi]), t))
            count += 2
            if float(ends.max()) >= vanish_tol and float(ends.max()) > worst:
                worst, where = float(ends.max()), {"space": sp.name, "t": t, "endpoint_values": ends.tolist()}
    return IdentityResult("monotonicity", worst, vanish_tol, count, detail=where)


_RUNNERS = {
    "reduction": lambda: [reduction_residuals()],
    "qiden1": lambda: [qiden_residuals()[0]],
    "qiden2": lambda: [qiden_residuals()[1]],
    "derivative": lambda: [derivative_residuals()],
    "comparison": lambda: [comparison_residuals()],
    "semigroup": lambda: [semigroup_residuals()],
    "normalization": lambda: [normalization_residuals(), ball_simplex_normalization_residuals()],
    "symmetry": lambda: [symmetry_residuals()],
    "long_time": lambda: [long_time_deviation(bound=math.inf)],
    "monotonicity": lambda: [monotonicity_check()],
}


def run_identity_checks(which=None) -> list[IdentityResult]:
    """Run the named checks (all by default) on their built-in grids."""
    names = list(IDENTITIES) if not which else list(which)
    unknown = [w for w in names if w not in _RUNNERS]
    if unknown:
        raise DomainError(f"unknown identities {unknown}; choose from {IDENTITIES}")
    if "qiden1" in names and "qiden2" in names:
        q1, q2 = qiden_residuals()
        cache = {"qiden1": [q1], "qiden2": [q2]}
    else:
        cache = {}
    out = []
    for w in names:
        out.extend(cache[w] if w in cache else _RUNNERS[w]())
    return out


# ---------------------------------------------------------------------------
# Gaussian exponent


@dataclass(frozen=True)
class VaradhanReport:
    """Estimates divisor * t * |log K_t| / dist^2, which tend to 1 as t -> 0."""

    target: str
    dist: float
    times: tuple[float, ...]
    log_kernel: tuple[float, ...]
    ratios: tuple[float, ...]
    divisor: float

    @property
    def final(self) -> float:
        """Estimate at the smallest time."""
        return self.ratios[int(np.argmin(self.times))]

    @property
    def drift(self) -> float:
        """Change of the estimate between the two smallest times."""
        order = np.argsort(self.times)
        if len(order) < 2:
            return 0.0
        return self.ratios[order[0]] - self.ratios[order[1]]

    @property
    def extrapolated(self) -> float:
        """Least-squares limit of ratio = c0 + c1 t log(1/t) as t -> 0."""
        t = np.asarray(self.times)
        if t.size < 3:
            return self.final
        A = np.column_stack([np.ones_like(t), t * np.log(1 / t)])
        coef, *_ = np.linalg.lstsq(A, np.asarray(self.ratios), rcond=None)
        return float(coef[0])


def run_varadhan_check(target: str, point, times) -> VaradhanReport:
    """Estimate the Gaussian exponent along a decreasing time sequence.

    ``point`` is target-specific: (alpha, beta, phi, psi) for jacobi,
    (SpaceDescriptor, dist) for symmetric, (mu, x, y) for ball and
    (kappa, x, y) for simplex. The simplex uses divisor 1, the others 4.
    """
    times = tuple(float(t) for t in times)
    if not times:
        raise DomainError("need at least one time")
    if target == "jacobi":
        a, b, phi, psi = point
        dist = abs(phi - psi)
        if dist == 0:
            raise DomainError("the points must be distinct")
        p = JacobiParams(a, b)
        logs = [precise.log_kernel(p, math.cos(phi), math.cos(psi), t) for t in times]
        divisor = 4.0
    elif target == "symmetric":
        space, dist = point
        if not isinstance(space, SpaceDescriptor):
            raise DomainError("symmetric target needs a SpaceDescriptor")
        if dist == 0:
            raise DomainError("the points must be distinct")
        logs = [float(log_symmetric_heat_kernel(space, [dist], t)[0]) for t in times]
        divisor = 4.0
    elif target == "ball":
        mu, x, y = point
        near, far, _ = ball_gaps(x, y)
        dist = float(angle_from_gap(near)) if near <= far else math.pi - float(angle_from_gap(far))
        if dist == 0:
            raise DomainError("the points must be distinct")
        logs = [log_ball_heat_kernel(mu, x, y, t) for t in times]
        divisor = 4.0
    elif target == "simplex":
        kappa, x, y = point
        dist = dist_simplex(x, y)
        if simplex_gap(x, y) == 0:
            raise DomainError("the points must be distinct")
        logs = [log_simplex_heat_kernel(kappa, x, y, t) for t in times]
        divisor = 1.0
    else:
        raise DomainError(f"unknown target {target!r}")
    ratios = tuple(divisor * t * abs(lk) / dist**2 for t, lk in zip(times, logs))
    return VaradhanReport(target, float(dist), times, tuple(logs), ratios, divisor)
