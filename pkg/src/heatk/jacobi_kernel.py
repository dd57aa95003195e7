"""The Jacobi heat kernel G_t^{a,b}(x, y) and its structural identities.

    G_t(x, y) = sum_n exp(-t lambda_n) P_n(x) P_n(y) / h_n,   lambda_n = n (n + a + b + 1).

Everything in this module works in binary64. That is accurate in an absolute
sense (errors are a few ulps of G_t(1, 1)), which is enough near the diagonal
and for moderate times. Values far out in the Gaussian tail need the
extended-precision engine in :mod:`heatk.precise`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .quadrature import gauss_jacobi_rule
from .specfun import (
    DomainError,
    JacobiParams,
    log_jacobi_at_one,
    log_jacobi_norm_h,
    recurrence_coefficients,
)

__all__ = [
    "T_MIN",
    "DEFAULT_TOL",
    "BelowTimeFloorError",
    "HeatQuery",
    "eigenvalue",
    "log_term_bounds",
    "truncation_order",
    "heat_kernel",
    "heat_kernel_reduced",
    "reduction_constant",
    "heat_kernel_dx_at_one",
    "quadratic_transform_pair",
    "comparison_check",
]

T_MIN = 1e-4
DEFAULT_TOL = 1e-12
# Crude bound inflation when min(a, b) < -1/2, where the endpoint-maximum
# property of Jacobi polynomials is no longer available.
_SAFETY = 10.0
_CLAMP = 1e-14


class BelowTimeFloorError(DomainError):
    """Raised when a time below the configured floor is requested."""


def eigenvalue(params: JacobiParams, n):
    """lambda_n = n (n + a + b + 1)."""
    n = np.asarray(n, dtype=float)
    val = n * (n + params.alpha + params.beta + 1.0)
    return float(val) if val.ndim == 0 else val


def _check_time(t: float, t_min: float) -> float:
    t = float(t)
    if not t > 0 or not math.isfinite(t):
        raise DomainError(f"time must be positive and finite, got {t}")
    if t < t_min:
        raise BelowTimeFloorError(
            f"t = {t:g} is below the floor {t_min:g}; the series would need too many "
            "terms (pass a smaller t_min to override)"
        )
    return t


def log_term_bounds(params: JacobiParams, n) -> np.ndarray:
    """log M_n with M_n >= |P_n(x) P_n(y)| / h_n on [-1, 1]^2.

    M_n = P_n^{a v b, a ^ b}(1)^2 / h_n, inflated by a fixed factor when the
    smaller parameter is below -1/2.
    """
    hi = JacobiParams(max(params.alpha, params.beta), min(params.alpha, params.beta))
    n = np.asarray(n, dtype=float)
    out = 2.0 * log_jacobi_at_one(hi, n) - log_jacobi_norm_h(params, n)
    if min(params.alpha, params.beta) < -0.5:
        out = out + math.log(_SAFETY)
    return np.asarray(out, dtype=float)


def _log_terms(params: JacobiParams, t: float, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1, dtype=float)
    return log_term_bounds(params, n) - t * eigenvalue(params, n)


def truncation_order(
    params: JacobiParams,
    t: float,
    tol: float | None = DEFAULT_TOL,
    *,
    log_tol: float | None = None,
) -> int:
    """Smallest N with sum_{n > N} exp(-t lambda_n) M_n below the tolerance.

    ``log_tol`` (natural log of the tolerance) takes precedence over ``tol``
    and allows thresholds far below the binary64 range.
    """
    t = float(t)
    if not t > 0:
        raise DomainError("time must be positive")
    if log_tol is None:
        if tol is None or not tol > 0:
            raise DomainError("tolerance must be positive")
        log_tol = math.log(tol)
    n_max = 16
    while True:
        lt = _log_terms(params, t, n_max)
        peak = int(np.argmax(lt))
        # terms beyond n_max decay at least geometrically with ratio e^{-2t n_max}
        # once past the peak; require a comfortable margin before trusting the tail
        if peak < n_max // 2 and lt[-1] < log_tol - 60.0:
            break
        n_max *= 2
    # tail[k] = log sum_{n > k} term_n
    rev = np.logaddexp.accumulate(lt[::-1])[::-1]
    tail = np.append(rev[1:], -np.inf)
    ok = np.nonzero(tail < log_tol)[0]
    return int(ok[0])


def _series(params: JacobiParams, n: int, t: float, x: np.ndarray, y: np.ndarray, *, odd_only: bool = False) -> np.ndarray:
    """Partial sum of the kernel series up to degree n (x, y broadcast).

    With ``odd_only`` only the odd degrees are summed.
    """
    k = np.arange(n + 1, dtype=float)
    w = np.exp(-t * eigenvalue(params, k) - log_jacobi_norm_h(params, k))
    if odd_only:
        w[::2] = 0.0
    a, b = params.alpha, params.beta
    total = np.full(np.broadcast(x, y).shape, w[0])
    if n == 0:
        return total
    px0, py0 = np.ones_like(x), np.ones_like(y)
    px1 = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x
    py1 = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * y
    total = total + w[1] * px1 * py1
    ca, cb, cc = recurrence_coefficients(params, n)
    for j in range(2, n + 1):
        px0, px1 = px1, (ca[j] + cb[j] * x) * px1 - cc[j] * px0
        py0, py1 = py1, (ca[j] + cb[j] * y) * py1 - cc[j] * py0
        total = total + w[j] * px1 * py1
    return total


def _clamp(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + _CLAMP) or np.any(np.isnan(x)):
        raise DomainError("arguments must lie in [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def heat_kernel(
    params: JacobiParams,
    x,
    y,
    t: float,
    *,
    tol: float = DEFAULT_TOL,
    t_min: float = T_MIN,
):
    """G_t^{a,b}(x, y) by the truncated eigenfunction series (tail below ``tol``).

    ``x`` and ``y`` may be arrays; they are broadcast against each other.
    """
    t = _check_time(t, t_min)
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    x, y = _clamp(x), _clamp(y)
    n = truncation_order(params, t, tol)
    val = _series(params, n, t, x, y)
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class HeatQuery:
    """One evaluation request for G_t^{a,b}(x, y)."""

    params: JacobiParams
    x: float
    y: float
    t: float
    tol: float = DEFAULT_TOL
    t_min: float = field(default=T_MIN, compare=False)

    def __post_init__(self) -> None:
        _check_time(self.t, self.t_min)
        if not self.tol > 0:
            raise DomainError("tolerance must be positive")
        for v in (self.x, self.y):
            if not abs(v) <= 1.0 + _CLAMP:
                raise DomainError("arguments must lie in [-1, 1]")

    def evaluate(self) -> float:
        return heat_kernel(self.params, self.x, self.y, self.t, tol=self.tol, t_min=self.t_min)


def reduction_constant(alpha: float, beta: float) -> float:
    """sqrt(pi) Gamma(a+b+3/2) / (2^{a+b+1} Gamma(a+1) Gamma(b+1))."""
    return math.exp(
        0.5 * math.log(math.pi)
        + special.gammaln(alpha + beta + 1.5)
        - (alpha + beta + 1.0) * math.log(2.0)
        - special.gammaln(alpha + 1.0)
        - special.gammaln(beta + 1.0)
    )


def heat_kernel_reduced(
    alpha: float,
    beta: float,
    phi: float,
    psi: float,
    t: float,
    *,
    tol: float = DEFAULT_TOL,
    m: int = 96,
    t_min: float = T_MIN,
) -> float:
    """G_t^{a,b}(cos phi, cos psi) through the double Pi_a x Pi_b average of an
    ultraspherical kernel at time t/4 evaluated against the endpoint 1."""
    if alpha < -0.5 or beta < -0.5:
        raise DomainError("the reduction formula needs alpha, beta >= -1/2")
    for ang in (phi, psi):
        if not 0.0 <= ang <= math.pi:
            raise DomainError("angles must lie in [0, pi]")
    t = _check_time(t, t_min)
    lam = alpha + beta + 0.5
    ru, rv = gauss_jacobi_rule(alpha, m), gauss_jacobi_rule(beta, m)
    s = math.sin(phi / 2) * math.sin(psi / 2)
    c = math.cos(phi / 2) * math.cos(psi / 2)
    arg = np.add.outer(ru.nodes * s, rv.nodes * c)
    vals = heat_kernel(JacobiParams(lam, lam), np.clip(arg, -1.0, 1.0), 1.0, t / 4, tol=tol, t_min=t_min / 4)
    return reduction_constant(alpha, beta) * float(ru.weights @ vals @ rv.weights)


def heat_kernel_dx_at_one(
    params: JacobiParams,
    x,
    t: float,
    *,
    tol: float = DEFAULT_TOL,
    t_min: float = T_MIN,
):
    """d/dx G_t^{a,b}(x, 1) = 2 (a + 1) exp(-t (a + b + 2)) G_t^{a+1,b+1}(x, 1)."""
    a, b = params.alpha, params.beta
    g = heat_kernel(params.shifted(), x, 1.0, t, tol=tol, t_min=t_min)
    return 2.0 * (a + 1.0) * math.exp(-t * (a + b + 2.0)) * g


def quadratic_transform_pair(
    alpha: float,
    x: float,
    y: float,
    t: float,
    *,
    tol: float = DEFAULT_TOL,
    t_min: float = T_MIN,
) -> tuple[float, float | None]:
    """Residuals of the two quadratic transformations linking (a, -1/2), (a, 1/2)
    to the symmetric kernel (a, a) at a quarter of the time.

    The second residual is ``None`` when x y = 0 (its (x y)^{-1} factor is singular).
    """
    x, y = float(_clamp(x)), float(_clamp(y))
    p_sym = JacobiParams(alpha, alpha)
    g_pp = heat_kernel(p_sym, x, y, t / 4, tol=tol, t_min=t_min / 4)
    g_mp = heat_kernel(p_sym, -x, y, t / 4, tol=tol, t_min=t_min / 4)
    u, v = 2 * x * x - 1, 2 * y * y - 1
    scale = 2.0 ** (-alpha - 1.5)
    lhs1 = heat_kernel(JacobiParams(alpha, -0.5), u, v, t, tol=tol, t_min=t_min)
    r1 = lhs1 - scale * (g_pp + g_mp)
    if x * y == 0:
        return r1, None
    lhs2 = heat_kernel(JacobiParams(alpha, 0.5), u, v, t, tol=tol, t_min=t_min)
    # g_pp - g_mp is twice the odd-degree part of the series; summing that part
    # directly avoids the cancellation that the (x y)^{-1} factor would amplify
    odd = float(_series(p_sym, truncation_order(p_sym, t / 4, tol), t / 4, np.asarray(x), np.asarray(y), odd_only=True))
    r2 = lhs2 - scale * math.exp(t * (alpha + 1) / 2) / (x * y) * odd
    return r1, r2


def comparison_check(
    alpha: float,
    beta: float,
    delta: float,
    x: float,
    y: float,
    t: float,
    *,
    slack: float = 1e-12,
    t_min: float = T_MIN,
) -> bool:
    """Whether [(1+x)(1+y)]^{delta/2} G_t^{a,b+delta}(x,y) <= e^{delta(a+b+1+delta/2)t/2} G_t^{a,b}(x,y) + slack.

    Both kernels come from the extended-precision engine, so the check is
    meaningful deep in the Gaussian tail as well.
    """
    from . import precise

    if delta < 0 or beta < -delta / 2:
        raise DomainError("need delta >= 0 and beta >= -delta/2")
    p0 = JacobiParams(alpha, beta)
    pd = JacobiParams(alpha, beta + delta)
    t = _check_time(t, t_min)
    x, y = float(_clamp(x)), float(_clamp(y))
    rhs_log = delta * (alpha + beta + 1 + delta / 2) * t / 2 + precise.log_kernel(p0, x, y, t)
    if delta == 0:
        return True
    w = (1 + x) * (1 + y)
    if w == 0:
        return 0.0 <= math.exp(rhs_log) + slack
    lhs_log = 0.5 * delta * math.log(w) + precise.log_kernel(pd, x, y, t)
    return lhs_log <= float(np.logaddexp(rhs_log, math.log(slack)))
