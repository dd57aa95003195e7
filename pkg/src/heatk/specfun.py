"""Jacobi polynomials, their norms and endpoint values, and log-gamma.

Everything here is evaluated in binary64. Gamma-ratio constants go through
log-gamma so that degrees of several thousand do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "DomainError",
    "JacobiParams",
    "log_gamma",
    "jacobi_table",
    "jacobi_poly",
    "jacobi_norm_h",
    "log_jacobi_norm_h",
    "jacobi_at_one",
    "log_jacobi_at_one",
    "gegenbauer",
    "recurrence_coefficients",
]


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


@dataclass(frozen=True)
class JacobiParams:
    """Type parameters (alpha, beta) of the weight (1-x)^alpha (1+x)^beta."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        a, b = float(self.alpha), float(self.beta)
        if not (math.isfinite(a) and math.isfinite(b)) or a <= -1 or b <= -1:
            raise DomainError(f"need alpha, beta > -1, got ({a}, {b})")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def sharp_range(self) -> bool:
        """True when both parameters are at least -1/2."""
        return self.alpha >= -0.5 and self.beta >= -0.5

    def swapped(self) -> JacobiParams:
        return JacobiParams(self.beta, self.alpha)

    def shifted(self, da: float = 1.0, db: float = 1.0) -> JacobiParams:
        return JacobiParams(self.alpha + da, self.beta + db)


def log_gamma(z):
    """Natural log of Gamma(z) for z > 0 (scalar or array)."""
    if np.ndim(z) == 0:
        z = float(z)
        if not z > 0:
            raise DomainError(f"log_gamma needs z > 0, got {z}")
        return math.lgamma(z)
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise DomainError("log_gamma needs z > 0")
    return special.gammaln(z)


def recurrence_coefficients(params: JacobiParams, n: int):
    """Coefficients (a_k, b_k, c_k), k = 2..n, of the upward recurrence

        P_k(x) = (a_k + b_k x) P_{k-1}(x) - c_k P_{k-2}(x).

    Returned as three float arrays indexed by k (entries 0 and 1 unused).
    """
    a, b = params.alpha, params.beta
    k = np.arange(n + 1, dtype=float)
    k[:2] = 2.0  # placeholders, keeps the divisions finite
    s = a + b
    d = 2.0 * k * (k + s) * (2.0 * k + s - 2.0)
    ca = (2.0 * k + s - 1.0) * (a * a - b * b) / d
    cb = (2.0 * k + s - 2.0) * (2.0 * k + s - 1.0) * (2.0 * k + s) / d
    cc = 2.0 * (k + a - 1.0) * (k + b - 1.0) * (2.0 * k + s) / d
    return ca, cb, cc


def jacobi_table(params: JacobiParams, n: int, x) -> np.ndarray:
    """All of P_0, ..., P_n at x; shape (n + 1,) + shape(x)."""
    if n < 0:
        raise DomainError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    out = np.empty((n + 1,) + x.shape)
    out[0] = 1.0
    if n == 0:
        return out
    a, b = params.alpha, params.beta
    out[1] = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x
    ca, cb, cc = recurrence_coefficients(params, n)
    for k in range(2, n + 1):
        out[k] = (ca[k] + cb[k] * x) * out[k - 1] - cc[k] * out[k - 2]
    return out


def jacobi_poly(params: JacobiParams, n: int, x):
    """P_n^{alpha,beta}(x) by a single upward pass of the three-term recurrence."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > 1.0 + 1e-14):
        raise DomainError("x must lie in [-1, 1]")
    val = jacobi_table(params, n, x_arr)[n]
    return float(val) if val.ndim == 0 else val


def log_jacobi_norm_h(params: JacobiParams, n):
    """log h_n, h_n the squared L^2 norm of P_n against (1-x)^a (1+x)^b dx.

    For n = 0 the product (2n+a+b+1) Gamma(n+a+b+1) is taken as
    Gamma(a+b+2), which covers the degenerate case a+b+1 = 0.
    """
    a, b = params.alpha, params.beta
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 0):
        raise DomainError("degree must be non-negative")
    nn = np.maximum(n_arr, 1.0)
    denom = np.where(
        n_arr == 0,
        special.gammaln(a + b + 2.0),
        np.log(2.0 * nn + a + b + 1.0) + special.gammaln(nn + a + b + 1.0),
    )
    val = (
        (a + b + 1.0) * math.log(2.0)
        + special.gammaln(n_arr + a + 1.0)
        + special.gammaln(n_arr + b + 1.0)
        - denom
        - special.gammaln(n_arr + 1.0)
    )
    return float(val) if val.ndim == 0 else val


def jacobi_norm_h(params: JacobiParams, n):
    return np.exp(log_jacobi_norm_h(params, n))


def log_jacobi_at_one(params: JacobiParams, n):
    """log P_n(1) = log Gamma(n+a+1) - log Gamma(n+1) - log Gamma(a+1)."""
    a = params.alpha
    n_arr = np.asarray(n, dtype=float)
    val = special.gammaln(n_arr + a + 1.0) - special.gammaln(n_arr + 1.0) - special.gammaln(a + 1.0)
    return float(val) if val.ndim == 0 else val


def jacobi_at_one(params: JacobiParams, n):
    return np.exp(log_jacobi_at_one(params, n))


def gegenbauer(lam: float, n: int, x):
    """Gegenbauer polynomial C_n^lam(x), 0 != lam > -1/2, via P_n^{lam-1/2, lam-1/2}."""
    if lam == 0 or not lam > -0.5:
        raise DomainError(f"Gegenbauer parameter must satisfy 0 != lam > -1/2, got {lam}")
    # Gamma(2 lam + n) / Gamma(2 lam) = 2 lam Gamma(2 lam + n) / Gamma(2 lam + 1); both
    # gamma arguments are positive, so the sign of the factor is the sign of lam
    if n == 0:
        return jacobi_poly(JacobiParams(lam - 0.5, lam - 0.5), 0, x)
    log_ratio = (
        special.gammaln(2 * lam + n)
        - special.gammaln(2 * lam + 1)
        + special.gammaln(lam + 0.5)
        - special.gammaln(lam + n + 0.5)
    )
    factor = 2 * lam * math.exp(log_ratio)
    p = JacobiParams(lam - 0.5, lam - 0.5)
    return factor * jacobi_poly(p, n, x)
