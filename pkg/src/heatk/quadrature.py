"""Integration against the symmetric probability measures Pi_nu on [-1, 1].

Pi_nu has density Gamma(nu+1) / (sqrt(pi) Gamma(nu+1/2)) (1-w^2)^(nu-1/2) for
nu > -1/2 and is the two-atom measure (delta_{-1} + delta_1)/2 for nu = -1/2.

Besides plain Gauss rules this module builds *graded* rules: composite rules
whose panels shrink geometrically towards w = 1. Integrands met in the heat
kernel representations are sharply peaked at that endpoint for small times,
and graded rules resolve the peak without an adaptive driver. They also return
the gaps 1 - w exactly, so callers can form 1 - (A + B w) without cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import linalg, special

from .specfun import DomainError

__all__ = [
    "QuadratureRule",
    "TensorRule",
    "GradedRule",
    "gauss_jacobi",
    "gauss_jacobi_rule",
    "half_rule",
    "graded_rule",
    "integrate_pi",
    "integrate_half",
    "integrate_tensor",
    "pi_density_constant",
]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def pi_density_constant(nu: float) -> float:
    """Normalising constant Gamma(nu+1) / (sqrt(pi) Gamma(nu+1/2)) of Pi_nu."""
    return math.exp(math.lgamma(nu + 1.0) - 0.5 * math.log(math.pi) - math.lgamma(nu + 0.5))


@lru_cache(maxsize=256)
def _gauss_jacobi_cached(m: int, a: float, b: float):
    k = np.arange(m, dtype=float)
    s = a + b
    diag = np.empty(m)
    diag[0] = (b - a) / (s + 2.0)
    if m > 1:
        kk = k[1:]
        diag[1:] = (b * b - a * a) / ((2 * kk + s) * (2 * kk + s + 2.0))
    off = np.empty(max(m - 1, 0))
    if m > 1:
        off[0] = 4.0 * (1 + a) * (1 + b) / ((2 + s) ** 2 * (3 + s))
        kk = k[2:]
        off[1:] = (
            4.0 * kk * (kk + a) * (kk + b) * (kk + s)
            / ((2 * kk + s) ** 2 * (2 * kk + s + 1.0) * (2 * kk + s - 1.0))
        )
        off = np.sqrt(off)
    nodes, vecs = linalg.eigh_tridiagonal(diag, off)
    log_mu0 = (s + 1.0) * math.log(2.0) + special.betaln(a + 1.0, b + 1.0)
    weights = math.exp(log_mu0) * vecs[0, :] ** 2
    return _frozen(nodes), _frozen(weights)


def gauss_jacobi(m: int, a: float, b: float):
    """m-point Gauss rule for the weight (1-x)^a (1+x)^b on [-1, 1] (Golub-Welsch).

    Weights are not normalised: they sum to 2^(a+b+1) B(a+1, b+1).
    """
    if m < 1:
        raise DomainError("a quadrature rule needs at least one point")
    if a <= -1 or b <= -1:
        raise DomainError("Jacobi weight exponents must exceed -1")
    return _gauss_jacobi_cached(int(m), float(a), float(b))


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights representing Pi_nu."""

    nu: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        object.__setattr__(self, "weights", _frozen(self.weights))

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=128)
def _pi_rule(nu: float, m: int) -> QuadratureRule:
    if nu == -0.5:
        return QuadratureRule(nu, [-1.0, 1.0], [0.5, 0.5])
    p = nu - 0.5
    x, w = gauss_jacobi(m, p, p)
    # enforce exact antisymmetry of the nodes and symmetry of the weights
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(nu, x, w / w.sum())


def gauss_jacobi_rule(nu: float, m: int) -> QuadratureRule:
    """m-point Gauss rule for Pi_nu, exact up to degree 2m-1.

    For nu = -1/2 the two atoms at -1 and 1 are returned whatever m is.
    """
    nu = float(nu)
    if m < 1:
        raise DomainError("a quadrature rule needs at least one point")
    if nu < -0.5:
        raise DomainError(f"Pi_nu requires nu >= -1/2, got {nu}")
    return _pi_rule(nu, int(m))


def integrate_pi(f: Callable[[np.ndarray], np.ndarray], nu: float, m: int = 64) -> float:
    """Integral of f against Pi_nu; (f(-1) + f(1))/2 in the atomic case."""
    return gauss_jacobi_rule(nu, m).integrate(f)


@lru_cache(maxsize=128)
def _half_rule(nu: float, m: int) -> QuadratureRule:
    if nu == -0.5:
        return QuadratureRule(nu, [1.0], [0.5])
    p = nu - 0.5
    s, ws = gauss_jacobi(m, p, 0.0)
    w = 0.5 * (1.0 + s)
    weights = pi_density_constant(nu) * 2.0 ** (-nu - 0.5) * ws * (1.0 + w) ** p
    return QuadratureRule(nu, w, weights)


def half_rule(nu: float, m: int = 64) -> QuadratureRule:
    """Rule for Pi_nu restricted to [0, 1] (total mass 1/2, not renormalised).

    Uses w = (1 + s)/2, so the endpoint singularity (1 - w)^(nu - 1/2) is
    carried by a Gauss-Jacobi weight and the rule stays spectrally accurate.
    """
    nu = float(nu)
    if nu < -0.5:
        raise DomainError(f"Pi_nu requires nu >= -1/2, got {nu}")
    if m < 1:
        raise DomainError("a quadrature rule needs at least one point")
    return _half_rule(nu, int(m))


def integrate_half(f: Callable[[np.ndarray], np.ndarray], nu: float, m: int = 64) -> float:
    return half_rule(nu, m).integrate(f)


@dataclass(frozen=True)
class GradedRule:
    """Composite rule for Pi_nu on [lower, 1] with panels graded towards 1.

    ``gaps`` holds 1 - node to full relative precision.
    """

    nu: float
    nodes: np.ndarray
    gaps: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.nodes.size


def _panel_edges(scale: float, span: float, ratio: float) -> list[float]:
    edges = [0.0]
    e = scale
    while e < span:
        edges.append(e)
        e *= ratio
    # merge a sliver at the far end into its neighbour
    if len(edges) > 2 and span - edges[-1] < 0.5 * (edges[-1] - edges[-2]):
        edges.pop()
    edges.append(span)
    return edges


@lru_cache(maxsize=4096)
def _graded(nu: float, scale: float, lower: float, m: int, ratio: float) -> GradedRule:
    span = 1.0 - lower
    if nu == -0.5:
        if lower == -1.0:
            return GradedRule(nu, _frozen([1.0, -1.0]), _frozen([0.0, 2.0]), _frozen([0.5, 0.5]))
        return GradedRule(nu, _frozen([1.0]), _frozen([0.0]), _frozen([0.5]))
    p = nu - 0.5
    c = pi_density_constant(nu)
    edges = _panel_edges(scale, span, ratio)
    gaps, weights = [], []
    xg, wg = gauss_jacobi(m, 0.0, 0.0)
    last = len(edges) - 2
    for i, (g0, g1) in enumerate(zip(edges[:-1], edges[1:])):
        h = g1 - g0
        touches_far = i == last and lower == -1.0
        if i == 0 and touches_far:
            x, w = gauss_jacobi(m, p, p)
            # gap coordinate g = 1 - u = 1 - x
            g = 1.0 - x
            gaps.append(g)
            weights.append(c * w)
        elif i == 0:
            x, w = gauss_jacobi(m, 0.0, p)
            g = 0.5 * h * (1.0 + x)
            gaps.append(g)
            weights.append(c * w * (0.5 * h) ** (p + 1.0) * (2.0 - g) ** p)
        elif touches_far:
            x, w = gauss_jacobi(m, p, 0.0)
            g = g0 + 0.5 * h * (1.0 + x)
            gaps.append(g)
            weights.append(c * w * (0.5 * h) ** (p + 1.0) * g**p)
        else:
            g = g0 + 0.5 * h * (1.0 + xg)
            gaps.append(g)
            weights.append(c * wg * 0.5 * h * (g * (2.0 - g)) ** p)
    gaps = np.concatenate(gaps)
    weights = np.concatenate(weights)
    return GradedRule(nu, _frozen(1.0 - gaps), _frozen(gaps), _frozen(weights))


def graded_rule(
    nu: float,
    scale: float,
    lower: float = -1.0,
    m: int = 16,
    ratio: float = 4.0,
) -> GradedRule:
    """Graded composite rule for Pi_nu on [lower, 1], lower in {-1, 0}.

    The first panel is [1 - scale, 1]; later panels grow by ``ratio``. Pick
    ``scale`` no larger than the width of the integrand's peak at 1; a smaller
    scale only costs a few extra panels.
    """
    nu = float(nu)
    if nu < -0.5:
        raise DomainError(f"Pi_nu requires nu >= -1/2, got {nu}")
    if lower not in (-1.0, 0.0):
        raise DomainError("graded rules cover [-1, 1] or [0, 1]")
    if not scale > 0:
        raise DomainError("scale must be positive")
    # quantise so that the cache sees a bounded set of keys
    scale = float(min(2.0 ** math.floor(math.log2(scale)), 1.0 - lower))
    return _graded(nu, scale, float(lower), int(m), float(ratio))


@dataclass(frozen=True)
class TensorRule:
    """Product of one-dimensional Pi rules, one factor per coordinate."""

    factors: tuple[QuadratureRule, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise DomainError("a tensor rule needs at least one factor")

    @property
    def dim(self) -> int:
        return len(self.factors)

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Points of shape (npts, dim) and their product weights."""
        mesh = np.meshgrid(*[f.nodes for f in self.factors], indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        w = self.factors[0].weights
        for f in self.factors[1:]:
            w = np.multiply.outer(w, f.weights)
        return pts, np.asarray(w).ravel()


def integrate_tensor(f: Callable[[np.ndarray], np.ndarray], rules: TensorRule | Sequence[QuadratureRule]) -> float:
    """Full tensor-grid sum of f(u), u of shape (npts, k)."""
    if not isinstance(rules, TensorRule):
        rules = TensorRule(tuple(rules))
    pts, w = rules.grid()
    return float(np.dot(w, f(pts)))
