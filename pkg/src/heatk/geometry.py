"""Distances on the ball and the simplex, computed without cancellation.

Both distances are arccos of an inner product that is close to 1 for nearby
points. We carry the complementary quantity 1 - cos(dist) (the "gap") in a
sum-of-squares form instead, which stays accurate down to coincident points.
"""

from __future__ import annotations

import math

import numpy as np

from .specfun import DomainError

__all__ = [
    "ball_point",
    "simplex_point",
    "ball_gaps",
    "dist_ball",
    "simplex_sqrt",
    "simplex_gap",
    "dist_simplex",
    "angle_from_gap",
]

_TOL = 1e-12


def ball_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1 or not np.all(np.isfinite(x)):
        raise DomainError("a ball point needs finite coordinates")
    if float(x @ x) > 1.0 + _TOL:
        raise DomainError("point lies outside the closed unit ball")
    return x


def simplex_point(x) -> np.ndarray:
    """Validate x in V^d and return the full barycentric vector (x_1, ..., x_d, 1 - |x|_1)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1 or not np.all(np.isfinite(x)):
        raise DomainError("a simplex point needs finite coordinates")
    if np.any(x < -_TOL) or x.sum() > 1.0 + _TOL:
        raise DomainError("point lies outside the closed simplex")
    x = np.clip(x, 0.0, None)
    return np.append(x, max(0.0, 1.0 - x.sum()))


def angle_from_gap(gap):
    """theta in [0, pi/2] with 1 - cos(theta) = gap (gap in [0, 1])."""
    return 2.0 * np.arcsin(np.sqrt(np.clip(np.asarray(gap, dtype=float) / 2.0, 0.0, 1.0)))


def ball_gaps(x, y) -> tuple[float, float, float]:
    """(1 - cos d_B, 1 + cos d_B, s) with s = sqrt(1-|x|^2) sqrt(1-|y|^2)."""
    x, y = ball_point(x), ball_point(y)
    if x.shape != y.shape:
        raise DomainError("points must have the same dimension")
    a = math.sqrt(max(0.0, 1.0 - float(x @ x)))
    b = math.sqrt(max(0.0, 1.0 - float(y @ y)))
    near = 0.5 * float((x - y) @ (x - y)) + 0.5 * (a - b) ** 2
    far = 0.5 * float((x + y) @ (x + y)) + 0.5 * (a + b) ** 2
    return near, far, a * b


def _angle(near: float, far: float) -> float:
    if near <= far:
        return float(angle_from_gap(near))
    return math.pi - float(angle_from_gap(far))


def dist_ball(x, y) -> float:
    """arccos(<x,y> + sqrt(1-|x|^2) sqrt(1-|y|^2)), a metric on the closed ball."""
    near, far, _ = ball_gaps(x, y)
    return _angle(near, far)


def simplex_sqrt(x) -> np.ndarray:
    """Square roots of the d + 1 barycentric coordinates (a point on the sphere)."""
    return np.sqrt(simplex_point(x))


def simplex_gap(x, y) -> float:
    """1 - sum_j sqrt(x_j y_j) over all d + 1 coordinates."""
    sx, sy = simplex_sqrt(x), simplex_sqrt(y)
    if sx.shape != sy.shape:
        raise DomainError("points must have the same dimension")
    return 0.5 * float((sx - sy) @ (sx - sy))


def dist_simplex(x, y) -> float:
    """arccos(sum_j sqrt(x_j y_j)), in [0, pi/2]."""
    return float(angle_from_gap(simplex_gap(x, y)))
