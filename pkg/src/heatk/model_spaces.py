"""Heat kernels of the compact rank-one symmetric spaces, the ball and the simplex.

All three are built from the Jacobi kernel evaluated against the endpoint 1:

* symmetric spaces (diameter scaled to pi, normalised volume):
  K_t(dist) = h_0^{a,b} G_t^{a,b}(cos dist, 1) with (a, b) = (d/2 - 1, (d - d~)/2 - 1);
* the ball B^d with weight (1-|x|^2)^{mu-1/2}: a Pi_{mu-1/2} average of
  G_t^{l-1/2,l-1/2}(<x,y> + u s, 1), l = mu + (d-1)/2;
* the simplex V^d with weight prod x_j^{kappa_j - 1/2}: a (d+1)-fold Pi average of
  G_{t/4}^{l-1/2,l-1/2}(sum_j u_j sqrt(x_j y_j), 1), l = |kappa| + (d-1)/2.

Plain functions work in binary64; the ``log_*`` variants go through
:mod:`heatk.precise` and stay accurate where the kernels underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import precise
from .geometry import ball_gaps, ball_point, dist_ball, dist_simplex, simplex_gap, simplex_point
from .jacobi_kernel import DEFAULT_TOL, T_MIN, heat_kernel, heat_kernel_dx_at_one, truncation_order
from .quadrature import gauss_jacobi, gauss_jacobi_rule
from .specfun import DomainError, JacobiParams, jacobi_norm_h, log_jacobi_norm_h

__all__ = [
    "FAMILIES",
    "SpaceDescriptor",
    "default_catalog",
    "alpha_beta",
    "symmetric_heat_kernel",
    "log_symmetric_heat_kernel",
    "symmetric_neg_derivative",
    "log_symmetric_neg_derivative",
    "unscale_kernel",
    "dist_ball",
    "dist_simplex",
    "ball_measure_mass",
    "ball_constant",
    "ball_heat_kernel",
    "log_ball_heat_kernel",
    "ball_normalization",
    "simplex_measure_mass",
    "simplex_constant",
    "simplex_heat_kernel",
    "log_simplex_heat_kernel",
    "simplex_normalization",
]

FAMILIES = ("Sphere", "RealProj", "ComplexProj", "QuatProj", "CayleyPlane")


@dataclass(frozen=True)
class SpaceDescriptor:
    """A compact rank-one symmetric space, described by family and real dimension."""

    family: str
    d: int
    diam: float = math.pi

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        d = int(self.d)
        if d != self.d:
            raise DomainError("dimension must be an integer")
        ok = {
            "Sphere": d >= 1,
            "RealProj": d >= 2,
            "ComplexProj": d >= 4 and d % 2 == 0,
            "QuatProj": d >= 8 and d % 4 == 0,
            "CayleyPlane": d == 16,
        }[self.family]
        if not ok:
            raise DomainError(f"{self.family} does not exist in dimension {d}")
        if not self.diam > 0:
            raise DomainError("diameter must be positive")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "diam", float(self.diam))

    @property
    def d_tilde(self) -> int:
        """Dimension of the set of points at maximal distance from a given point."""
        return {
            "Sphere": 0,
            "RealProj": self.d - 1,
            "ComplexProj": self.d - 2,
            "QuatProj": self.d - 4,
            "CayleyPlane": 8,
        }[self.family]

    @property
    def name(self) -> str:
        return f"{self.family}{self.d}"


def default_catalog() -> tuple[SpaceDescriptor, ...]:
    """Representatives of all five families (the smallest one or two dimensions each)."""
    return (
        SpaceDescriptor("Sphere", 1),
        SpaceDescriptor("Sphere", 2),
        SpaceDescriptor("Sphere", 3),
        SpaceDescriptor("RealProj", 2),
        SpaceDescriptor("RealProj", 3),
        SpaceDescriptor("ComplexProj", 4),
        SpaceDescriptor("ComplexProj", 6),
        SpaceDescriptor("QuatProj", 8),
        SpaceDescriptor("CayleyPlane", 16),
    )


def alpha_beta(space: SpaceDescriptor) -> JacobiParams:
    """(d/2 - 1, (d - d~)/2 - 1)."""
    return JacobiParams(space.d / 2 - 1, (space.d - space.d_tilde) / 2 - 1)


def _check_dist(dist) -> np.ndarray:
    dist = np.asarray(dist, dtype=float)
    if np.any(dist < 0) or np.any(dist > math.pi + 1e-12):
        raise DomainError("scaled distances lie in [0, pi]")
    return np.clip(dist, 0.0, math.pi)


def symmetric_heat_kernel(space: SpaceDescriptor, dist, t: float, *, tol: float = DEFAULT_TOL, t_min: float = T_MIN):
    """Scaled kernel h_0 G_t(cos dist, 1) (diameter pi, probability volume)."""
    p = alpha_beta(space)
    dist = _check_dist(dist)
    val = jacobi_norm_h(p, 0) * heat_kernel(p, np.cos(dist), 1.0, t, tol=tol, t_min=t_min)
    return float(val) if np.ndim(val) == 0 else val


def log_symmetric_heat_kernel(space: SpaceDescriptor, dist, t: float) -> np.ndarray:
    p = alpha_beta(space)
    dist = np.atleast_1d(_check_dist(dist))
    return log_jacobi_norm_h(p, 0) + precise.log_kernel_at_one(p, np.cos(dist), t)


def symmetric_neg_derivative(space: SpaceDescriptor, dist, t: float, *, tol: float = DEFAULT_TOL, t_min: float = T_MIN):
    """-d/d(dist) of the scaled kernel: h_0 sin(dist) (d/dx) G_t(x, 1) at x = cos dist."""
    p = alpha_beta(space)
    dist = _check_dist(dist)
    val = jacobi_norm_h(p, 0) * np.sin(dist) * heat_kernel_dx_at_one(p, np.cos(dist), t, tol=tol, t_min=t_min)
    return float(val) if np.ndim(val) == 0 else val


def log_symmetric_neg_derivative(space: SpaceDescriptor, dist, t: float) -> np.ndarray:
    """log of :func:`symmetric_neg_derivative` (-inf at dist = 0)."""
    p = alpha_beta(space)
    dist = np.atleast_1d(_check_dist(dist))
    with np.errstate(divide="ignore"):
        log_sin = np.log(np.sin(dist))
    return (
        log_jacobi_norm_h(p, 0)
        + log_sin
        + math.log(2 * (p.alpha + 1))
        - t * (p.alpha + p.beta + 2)
        + precise.log_kernel_at_one(p.shifted(), np.cos(dist), t)
    )


def unscale_kernel(
    space: SpaceDescriptor,
    dist_unscaled: float,
    t_unscaled: float,
    volume: float | None,
    *,
    tol: float = DEFAULT_TOL,
    t_min: float = T_MIN,
) -> float:
    """Kernel of the space with its own diameter and volume:

    K_t(dist) = K~_{(pi/diam)^2 t}(dist pi/diam) / volume.
    """
    if volume is None or not volume > 0:
        raise DomainError("the total volume of the space must be supplied")
    if not 0 <= dist_unscaled <= space.diam * (1 + 1e-12):
        raise DomainError("distance exceeds the diameter")
    k = math.pi / space.diam
    return symmetric_heat_kernel(space, min(dist_unscaled * k, math.pi), k * k * t_unscaled, tol=tol, t_min=t_min) / volume


# ---------------------------------------------------------------------------
# ball


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not mu >= 0:
        raise DomainError("the ball representation needs mu >= 0")
    return mu


def ball_measure_mass(mu: float, d: int) -> float:
    """W_mu(B^d) = int_B (1-|x|^2)^{mu-1/2} dx = pi^{d/2} Gamma(mu+1/2) / Gamma(mu+(d+1)/2)."""
    if mu <= -0.5:
        raise DomainError("need mu > -1/2")
    return math.exp(0.5 * d * math.log(math.pi) + special.gammaln(mu + 0.5) - special.gammaln(mu + (d + 1) / 2))


def ball_constant(mu: float, d: int) -> float:
    """2^{2l} Gamma(l+1/2)^2 / (Gamma(2l+1) W_mu(B^d)), l = mu + (d-1)/2."""
    lam = mu + (d - 1) / 2
    return math.exp(
        2 * lam * math.log(2.0) + 2 * special.gammaln(lam + 0.5) - special.gammaln(2 * lam + 1)
    ) / ball_measure_mass(mu, d)


def _ball_setup(mu: float, x, y):
    mu = _check_mu(mu)
    x, y = ball_point(x), ball_point(y)
    if x.size != y.size:
        raise DomainError("points must have the same dimension")
    d = x.size
    if d < 2:
        raise DomainError("the ball representation needs d >= 2")
    lam = mu + (d - 1) / 2
    return mu, x, y, d, lam


def ball_heat_kernel(mu: float, x, y, t: float, *, tol: float = DEFAULT_TOL, m: int = 64, t_min: float = T_MIN) -> float:
    """h_t^mu(x, y) on the ball by an m-point Pi_{mu-1/2} rule (binary64)."""
    mu, x, y, d, lam = _ball_setup(mu, x, y)
    near, _, s = ball_gaps(x, y)
    rule = gauss_jacobi_rule(mu - 0.5, m)
    arg = np.clip((1.0 - near) - s * (1.0 - rule.nodes), -1.0, 1.0)
    vals = heat_kernel(JacobiParams(lam - 0.5, lam - 0.5), arg, 1.0, t, tol=tol, t_min=t_min)
    return ball_constant(mu, d) * float(rule.weights @ vals)


def log_ball_heat_kernel(mu: float, x, y, t: float, *, m: int = 16) -> float:
    """log h_t^mu(x, y) through the extended-precision endpoint table."""
    mu, x, y, d, lam = _ball_setup(mu, x, y)
    near, _, s = ball_gaps(x, y)
    table = precise.endpoint_table(JacobiParams(lam - 0.5, lam - 0.5), t)
    return math.log(ball_constant(mu, d)) + precise.log_integral_linear(table, near, [s], [mu - 0.5], m=m)


def _ball_polar_rule(mu: float, d: int, m: int):
    """Rule for int_B f(r, c) dW_mu with r = |y| and c the cosine to a fixed axis.

    Exact for polynomials in y of degree < 2m that depend only on |y| and that cosine.
    """
    # radial: s = 2 r^2 - 1, r^{d-1} (1 - r^2)^{mu-1/2} dr = const (1-s)^{mu-1/2} (1+s)^{d/2-1} ds
    s, ws = gauss_jacobi(m, mu - 0.5, d / 2 - 1)
    r = np.sqrt((1 + s) / 2)
    ws = ws * 2.0 ** (-(mu - 0.5) - (d / 2 - 1)) / 4
    # angular: int_{S^{d-1}} g(<e, w>) dw = |S^{d-2}| int g(c) (1-c^2)^{(d-3)/2} dc
    c, wc = gauss_jacobi(m, (d - 3) / 2, (d - 3) / 2)
    area = 2 * math.pi ** ((d - 1) / 2) / math.gamma((d - 1) / 2)
    return r, ws, c, wc * area


def ball_normalization(mu: float, x, t: float, *, tol: float = DEFAULT_TOL, m: int | None = None) -> float:
    """int_B h_t^mu(x, y) dW_mu(y), which equals 1.

    The kernel is a polynomial in y, so a product rule of sufficient order
    integrates it exactly up to the series truncation.
    """
    mu = _check_mu(mu)
    x = ball_point(x)
    d = x.size
    lam = mu + (d - 1) / 2
    n = truncation_order(JacobiParams(lam - 0.5, lam - 0.5), t, tol)
    mq = m or n // 2 + 4
    r, wr, c, wc = _ball_polar_rule(mu, d, mq)
    nx = float(np.linalg.norm(x))
    axis = x / nx if nx > 0 else np.eye(d)[0]
    perp = np.eye(d)[1] if abs(axis[1]) < 0.9 else np.eye(d)[0]
    perp = perp - (perp @ axis) * axis
    perp /= np.linalg.norm(perp)
    rule = gauss_jacobi_rule(mu - 0.5, max(n // 2 + 2, 8))
    p = JacobiParams(lam - 0.5, lam - 0.5)
    total = 0.0
    for ri, wri in zip(r, wr):
        ys = ri * (np.outer(c, axis) + np.outer(np.sqrt(1 - c * c), perp))
        inner = ys @ x
        srad = math.sqrt(max(0.0, 1 - nx * nx)) * math.sqrt(max(0.0, 1 - ri * ri))
        arg = np.clip(inner[:, None] + srad * rule.nodes[None, :], -1.0, 1.0)
        vals = heat_kernel(p, arg, 1.0, t, tol=tol) @ rule.weights
        total += wri * float(wc @ vals)
    return ball_constant(mu, d) * total


# ---------------------------------------------------------------------------
# simplex


def _check_kappa(kappa) -> np.ndarray:
    kappa = np.asarray(kappa, dtype=float).ravel()
    if kappa.size < 2 or np.any(~(kappa >= 0)):
        raise DomainError("kappa must be a non-negative vector with d + 1 >= 2 entries")
    return kappa


def simplex_measure_mass(kappa) -> float:
    """U_kappa(V^d) = prod_j Gamma(kappa_j + 1/2) / Gamma(|kappa| + (d+1)/2) (Dirichlet integral)."""
    kappa = _check_kappa(kappa)
    return math.exp(float(np.sum(special.gammaln(kappa + 0.5))) - special.gammaln(kappa.sum() + kappa.size / 2))


def simplex_constant(kappa) -> float:
    """sqrt(pi) Gamma(l + 1/2) / prod_j Gamma(kappa_j + 1/2), l = |kappa| + (d-1)/2."""
    kappa = _check_kappa(kappa)
    lam = kappa.sum() + (kappa.size - 2) / 2
    return math.exp(0.5 * math.log(math.pi) + special.gammaln(lam + 0.5) - float(np.sum(special.gammaln(kappa + 0.5))))


def _simplex_setup(kappa, x, y):
    kappa = _check_kappa(kappa)
    bx, by = simplex_point(x), simplex_point(y)
    if bx.size != kappa.size or by.size != kappa.size:
        raise DomainError("kappa needs d + 1 entries for points in V^d")
    lam = kappa.sum() + (kappa.size - 2) / 2
    return kappa, bx, by, lam


def simplex_heat_kernel(kappa, x, y, t: float, *, tol: float = DEFAULT_TOL, m: int = 64, t_min: float = T_MIN) -> float:
    """H_t^kappa(x, y) on V^d by a tensor Pi rule with m points per coordinate (binary64)."""
    kappa, bx, by, lam = _simplex_setup(kappa, x, y)
    c = np.sqrt(bx * by)
    active = np.nonzero(c > 0)[0]
    gap = simplex_gap(x, y)
    p = JacobiParams(lam - 0.5, lam - 0.5)
    if active.size == 0:
        val = heat_kernel(p, 1.0 - gap, 1.0, t / 4, tol=tol, t_min=t_min / 4)
        return simplex_constant(kappa) * val
    rules = [gauss_jacobi_rule(kappa[j] - 0.5, m) for j in active]
    # offsets 1 - u_j, summed over the tensor grid
    g = np.zeros(1)
    w = np.ones(1)
    for j, r in zip(active, rules):
        g = np.add.outer(g, c[j] * (1.0 - r.nodes)).ravel()
        w = np.multiply.outer(w, r.weights).ravel()
    arg = np.clip(1.0 - gap - g, -1.0, 1.0)
    total = 0.0
    step = 200_000
    for i in range(0, arg.size, step):
        vals = heat_kernel(p, arg[i : i + step], 1.0, t / 4, tol=tol, t_min=t_min / 4)
        total += float(w[i : i + step] @ vals)
    return simplex_constant(kappa) * total


def log_simplex_heat_kernel(kappa, x, y, t: float, *, m: int = 8) -> float:
    """log H_t^kappa(x, y) through the extended-precision endpoint table."""
    kappa, bx, by, lam = _simplex_setup(kappa, x, y)
    c = np.sqrt(bx * by)
    gap = simplex_gap(x, y)
    table = precise.endpoint_table(JacobiParams(lam - 0.5, lam - 0.5), t / 4)
    return math.log(simplex_constant(kappa)) + precise.log_integral_linear(table, gap, c, kappa - 0.5, m=m)


def _simplex_rule(kappa: np.ndarray, m: int):
    """Points (npts, d) and weights for int_V f dU_kappa, by stick-breaking.

    x_j = a_j prod_{i<j} (1 - a_i) with a_j ~ a^{p_j - 1} (1 - a)^{q_j - 1},
    p_j = kappa_j + 1/2 and q_j = sum_{i>j} p_i; exact for polynomials of
    degree < 2m - d.
    """
    p = kappa + 0.5
    d = kappa.size - 1
    pts = np.zeros((1, 0))
    rest = np.ones(1)
    w = np.ones(1)
    for j in range(d):
        q = p[j + 1 :].sum()
        s, ws = gauss_jacobi(m, q - 1, p[j] - 1)
        a = (1 + s) / 2
        ws = ws * 2.0 ** (-(p[j] + q - 1))
        new = np.multiply.outer(rest, a).ravel()
        pts = np.column_stack([np.repeat(pts, m, axis=0), new])
        rest = np.multiply.outer(rest, 1 - a).ravel()
        w = np.multiply.outer(w, ws).ravel()
    return pts, w


def simplex_normalization(kappa, x, t: float, *, tol: float = DEFAULT_TOL, m: int | None = None) -> float:
    """int_V H_t^kappa(x, y) dU_kappa(y), which equals 1."""
    kappa = _check_kappa(kappa)
    d = kappa.size - 1
    lam = kappa.sum() + (d - 1) / 2
    n = truncation_order(JacobiParams(lam - 0.5, lam - 0.5), t / 4, tol)
    mq = m or n // 4 + d + 3
    ys, wy = _simplex_rule(kappa, mq)
    mu_pts = n // 2 + 2
    vals = np.array([simplex_heat_kernel(kappa, x, y, t, tol=tol, m=mu_pts) for y in ys])
    return float(wy @ vals)
