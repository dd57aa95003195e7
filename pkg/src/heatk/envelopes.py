"""Closed-form two-sided envelopes for the heat kernels, and the two integral
estimates they rest on.

Each envelope is a product of a few simple factors (polynomial corrections, a
power of t, a Gaussian). They are stored as natural logarithms, since the
Gaussian factor underflows binary64 for small t long before the ratio of
kernel to envelope becomes uninteresting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .geometry import ball_gaps, simplex_point, simplex_gap, angle_from_gap
from .quadrature import graded_rule
from .specfun import DomainError

__all__ = [
    "EnvelopeValue",
    "env_jac_gen",
    "env_jac_spec",
    "env_symmetric",
    "env_symmetric_derivative",
    "env_symmetric_derivative_branches",
    "env_ball",
    "env_simplex",
    "lemma_fvii_log_pair",
    "lemma_fvii_pair",
    "lemma_f7_pair",
    "valid_symmetric_pair",
]


@dataclass(frozen=True)
class EnvelopeValue:
    """An envelope as named log-factors; ``value`` is the product of ``components``."""

    log_factors: tuple[tuple[str, float], ...]

    @property
    def log_value(self) -> float:
        return math.fsum(v for _, v in self.log_factors) if self.log_factors else 0.0

    @property
    def value(self) -> float:
        lv = self.log_value
        return 0.0 if lv == -math.inf else math.exp(lv)

    @property
    def components(self) -> dict[str, float]:
        return {k: (0.0 if v == -math.inf else math.exp(v)) for k, v in self.log_factors}


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _check_t(t: float) -> float:
    t = float(t)
    if not t > 0 or not math.isfinite(t):
        raise DomainError(f"time must be positive, got {t}")
    return t


def _check_angle(*angles: float) -> None:
    for a in angles:
        if not 0.0 <= a <= math.pi:
            raise DomainError(f"angle {a} outside [0, pi]")


def _power(base: float, expo: float) -> float:
    """log(base^expo) with 0^0 = 1."""
    return 0.0 if expo == 0 else expo * math.log(base)


def env_jac_gen(alpha: float, beta: float, phi: float, psi: float, t: float) -> EnvelopeValue:
    """[t + phi psi]^{-a-1/2} [t + (pi-phi)(pi-psi)]^{-b-1/2} t^{-1/2} exp(-(phi-psi)^2/4t)."""
    t = _check_t(t)
    _check_angle(phi, psi)
    return EnvelopeValue(
        (
            ("pole_0", _power(t + phi * psi, -alpha - 0.5)),
            ("pole_pi", _power(t + (math.pi - phi) * (math.pi - psi), -beta - 0.5)),
            ("time", -0.5 * math.log(t)),
            ("gauss", -((phi - psi) ** 2) / (4 * t)),
        )
    )


def env_jac_spec(lam: float, phi: float, t: float) -> EnvelopeValue:
    """t^{-lam-1/2} [t + pi - phi]^{-lam-1/2} t^{-1/2} exp(-phi^2/4t)."""
    t = _check_t(t)
    _check_angle(phi)
    return EnvelopeValue(
        (
            ("pole_0", _power(t, -lam - 0.5)),
            ("pole_pi", _power(t + math.pi - phi, -lam - 0.5)),
            ("time", -0.5 * math.log(t)),
            ("gauss", -(phi**2) / (4 * t)),
        )
    )


def valid_symmetric_pair(d: int, d_tilde: int) -> bool:
    """Whether (d, d~) is the dimension data of a compact rank-one symmetric space."""
    if d == 1:
        return d_tilde == 0
    if d_tilde == 0 and d >= 1:
        return True
    codim = d - d_tilde
    if codim == 1:
        return d >= 2
    if codim == 2:
        return d >= 4 and d % 2 == 0
    if codim == 4:
        return d >= 8 and d % 4 == 0
    if codim == 8:
        return d == 16
    return False


def _check_space(d: int, d_tilde: int) -> None:
    if not valid_symmetric_pair(d, d_tilde):
        raise DomainError(f"no compact rank-one symmetric space has (d, d~) = ({d}, {d_tilde})")


def env_symmetric(d: int, d_tilde: int, dist: float, t: float) -> EnvelopeValue:
    """[t + pi - dist]^{-(d-d~-1)/2} t^{-d/2} exp(-dist^2/4t), diameter scaled to pi."""
    _check_space(d, d_tilde)
    t = _check_t(t)
    _check_angle(dist)
    return EnvelopeValue(
        (
            ("pole_pi", _power(t + math.pi - dist, -(d - d_tilde - 1) / 2)),
            ("time", -0.5 * d * math.log(t)),
            ("gauss", -(dist**2) / (4 * t)),
        )
    )


def env_symmetric_derivative_branches(
    d: int, d_tilde: int, phi: float, t: float
) -> tuple[EnvelopeValue | None, EnvelopeValue | None]:
    """(short-time branch, long-time branch) of the envelope for -d/dphi of the kernel.

    A branch is ``None`` outside its range t <= 1 resp. t >= 1; at t = 1 both are given.
    """
    _check_space(d, d_tilde)
    t = _check_t(t)
    _check_angle(phi)
    lead = ("vanishing", _log(phi) + _log(math.pi - phi))
    short = long_ = None
    if t <= 1:
        short = EnvelopeValue(
            (
                lead,
                ("pole_pi", _power(t + math.pi - phi, -(d + 1 - d_tilde) / 2)),
                ("time", (-d / 2 - 1) * math.log(t)),
                ("gauss", -(phi**2) / (4 * t)),
            )
        )
    if t >= 1:
        long_ = EnvelopeValue((lead, ("decay", -t * (d - d_tilde / 2))))
    return short, long_


def env_symmetric_derivative(d: int, d_tilde: int, phi: float, t: float) -> EnvelopeValue:
    """Envelope of -d/dphi of the scaled kernel; the short-time branch is used at t = 1."""
    short, long_ = env_symmetric_derivative_branches(d, d_tilde, phi, t)
    return short if short is not None else long_


def env_ball(mu: float, d: int, x, y, t: float) -> EnvelopeValue:
    """Envelope for the ball kernel with weight (1-|x|^2)^{mu-1/2}:

    [t + pi - d_B]^{-lam} (t + s/(pi - d_B))^{-mu} t^{-d/2} exp(-d_B^2/4t),
    lam = mu + (d-1)/2, s = sqrt(1-|x|^2) sqrt(1-|y|^2).
    """
    if mu < 0:
        raise DomainError("mu must be non-negative")
    t = _check_t(t)
    x, y = np.asarray(x, dtype=float).ravel(), np.asarray(y, dtype=float).ravel()
    if x.size != d or y.size != d:
        raise DomainError(f"points must have {d} coordinates")
    near, far, s = ball_gaps(x, y)
    if near <= far:
        dist = float(angle_from_gap(near))
        co_dist = math.pi - dist
    else:
        co_dist = float(angle_from_gap(far))
        dist = math.pi - co_dist
    # s / (pi - d_B) -> 0 at antipodal points (s <= (1 + cos d_B)/2 there)
    middle = 0.0 if co_dist == 0 else s / co_dist
    lam = mu + (d - 1) / 2
    return EnvelopeValue(
        (
            ("pole_pi", _power(t + co_dist, -lam)),
            ("boundary", _power(t + middle, -mu)),
            ("time", -0.5 * d * math.log(t)),
            ("gauss", -(dist**2) / (4 * t)),
        )
    )


def env_simplex(kappa, x, y, t: float) -> EnvelopeValue:
    """prod_j (t + sqrt(x_j y_j))^{-kappa_j} t^{-d/2} exp(-d_V^2/t), j over all d+1 coordinates."""
    kappa = np.asarray(kappa, dtype=float).ravel()
    if np.any(kappa < 0):
        raise DomainError("kappa must be non-negative")
    t = _check_t(t)
    bx, by = simplex_point(x), simplex_point(y)
    if bx.size != kappa.size or by.size != kappa.size:
        raise DomainError("kappa needs d + 1 entries for points in V^d")
    d = kappa.size - 1
    dist = float(angle_from_gap(simplex_gap(x, y)))
    factors = tuple(
        (f"face_{j + 1}", _power(t + math.sqrt(bx[j] * by[j]), -kappa[j])) for j in range(d + 1)
    )
    return EnvelopeValue(factors + (("time", -0.5 * d * math.log(t)), ("gauss", -(dist**2) / t)))


def _check_measure_integral(nu: float, A: float, B: float, D: float) -> None:
    if nu < -0.5:
        raise DomainError("nu must be at least -1/2")
    if not 0.0 <= B <= 1.0:
        raise DomainError("need 0 <= B <= 1")
    if not -1.0 <= A <= 1.0 - B + 1e-15:
        raise DomainError("need -1 <= A <= 1 - B")
    if not D > 0:
        raise DomainError("need D > 0")


def _measure_integral_logs(nu: float, xis, A: float, B: float, D: float, m: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised over xi: arrays of log lhs and log rhs."""
    _check_measure_integral(nu, A, B, D)
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    # gaps are formed as (1 - A) - B and (1 + A) + B so that A + B never rounds away B
    base = max(0.0, (1.0 - A) - B)  # 1 - cos Phi(1)
    co_base = max(0.0, (1.0 + A) + B)  # 1 + cos Phi(1)
    if base <= 1:
        phi1 = float(angle_from_gap(base))
        co1 = math.pi - phi1
    else:
        co1 = float(angle_from_gap(co_base))
        phi1 = math.pi - co1
    if B == 0:
        frac = 0.0
    elif co1 > 0:
        frac = B / co1
    else:
        # co1 underflowed; here A = -1 and pi - Phi(1) ~ sqrt(2B)
        frac = math.sqrt(B / 2)
    rhs = (
        (nu + 0.5) * math.log(D)
        - xis * math.log(co1 + D)
        - (nu + 0.5) * math.log(frac + D)
        - phi1**2 / D
    )
    if B == 0:
        rule_scale = 1.0
    else:
        width = D * max(math.sin(phi1), math.sqrt(D))
        rule_scale = max(min(width / (4 * B), 1.0), 1e-12)
    r = graded_rule(nu, rule_scale, lower=0.0, m=m)
    gap = base + B * r.gaps  # 1 - cos Phi(w)
    co_gap = np.clip((1.0 + A) + B * r.nodes, 0.0, 1.0)  # 1 + cos Phi(w), used when Phi > pi/2
    phi = np.where(gap <= 1, angle_from_gap(np.minimum(gap, 1.0)), math.pi - angle_from_gap(co_gap))
    integrand = -np.outer(xis, np.log(math.pi - phi + D)) + (-(phi**2) / D + np.log(r.weights))[None, :]
    lhs = np.logaddexp.reduce(integrand, axis=1)
    return lhs, rhs


def lemma_fvii_log_pair(nu: float, xi: float, A: float, B: float, D: float, *, m: int = 16) -> tuple[float, float]:
    """Logs of the two sides of the integral estimate

        int_0^1 (pi - Phi(w) + D)^{-xi} exp(-Phi(w)^2/D) dPi_nu(w)
          ~ D^{nu+1/2} (pi - Phi(1) + D)^{-xi} (B/(pi - Phi(1)) + D)^{-nu-1/2} exp(-Phi(1)^2/D),

    Phi(w) = arccos(A + B w), with B/(pi - Phi(1)) read as 0 when B = 0.
    The integral is over [0, 1] only; Pi_nu gives that half-interval mass 1/2.
    """
    lhs, rhs = _measure_integral_logs(nu, [xi], A, B, D, m)
    return float(lhs[0]), float(rhs[0])


def lemma_fvii_pair(nu: float, xi: float, A: float, B: float, D: float) -> tuple[float, float]:
    """The two sides of :func:`lemma_fvii_log_pair` as plain numbers (may underflow)."""
    lhs, rhs = lemma_fvii_log_pair(nu, xi, A, B, D)
    return math.exp(lhs), math.exp(rhs)


def lemma_f7_pair(gamma: float, a: float, b: float) -> tuple[float, float]:
    """(int_a^b e^{-x^2} (x-a)^gamma x^{gamma+1} dx,  ((b-a)b/((b-a)b+1))^{gamma+1} e^{-a^2}).

    The algebraic endpoint factor goes into the weight of an adaptive
    Gauss-Kronrod rule for algebraic singularities, so gamma < 0 needs no
    special handling.
    """
    if not gamma > -1:
        raise DomainError("need gamma > -1")
    if not 0 <= a <= b:
        raise DomainError("need 0 <= a <= b")
    if b == a:
        return 0.0, 0.0
    if a == 0:
        lhs, _ = integrate.quad(
            lambda x: math.exp(-x * x), 0.0, b, weight="alg", wvar=(2 * gamma + 1, 0.0), limit=200, epsabs=0, epsrel=1e-12
        )
    else:
        lhs, _ = integrate.quad(
            lambda x: math.exp(-x * x) * x ** (gamma + 1),
            a,
            b,
            weight="alg",
            wvar=(gamma, 0.0),
            limit=200,
            epsabs=0,
            epsrel=1e-12,
        )
    q = (b - a) * b
    rhs = (q / (q + 1)) ** (gamma + 1) * math.exp(-a * a)
    return lhs, rhs
