"""Extended-precision evaluation of log G_t^{a,b} deep in the Gaussian tail.

For small t and well-separated points the kernel is as small as
exp(-(phi - psi)^2 / 4t), e.g. e^{-2500} at t = 1e-3, while the terms of its
eigenfunction series are of size G_t(1, 1). The sum therefore cancels through
thousands of binary digits. This module sums the same series in MPFR
arithmetic (via gmpy2) with a working precision chosen from an a priori
estimate of that cancellation, checks the outcome against a running error
bound, and returns natural logarithms, which stay representable in binary64.

:class:`EndpointTable` caches a smooth interpolant of theta -> log G_t(cos theta, 1)
so that quadrature-based kernels (reduction formula, ball, simplex) can afford
many evaluations. :func:`log_integral_linear` is the shared integration driver
for those kernels.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .jacobi_kernel import eigenvalue, log_term_bounds, truncation_order
from .quadrature import graded_rule
from .specfun import DomainError, JacobiParams

__all__ = [
    "PrecisionError",
    "log_kernel",
    "log_kernel_matrix",
    "log_kernel_at_one",
    "EndpointTable",
    "endpoint_table",
    "log_integral_linear",
    "log_series_max",
]

_LN2 = math.log(2.0)
# a value is accepted once it exceeds the rounding-error bound by this many nats
_ACCEPT_NATS = 35.0
# the truncated tail is kept this many nats below the smallest requested value
_TAIL_NATS = 40.0
_GUARD_BITS = 64


class PrecisionError(ArithmeticError):
    """The requested value could not be resolved at any attempted precision."""


def log_series_max(params: JacobiParams, t: float) -> float:
    """log sum_n exp(-t lambda_n) M_n, an upper bound for |every partial sum|."""
    n = truncation_order(params, t, log_tol=-745.0)
    k = np.arange(n + 1, dtype=float)
    lt = log_term_bounds(params, k) - t * eigenvalue(params, k)
    return float(np.logaddexp.reduce(lt))


def _guess_log(params: JacobiParams, phi: np.ndarray, psi: np.ndarray, t: float) -> np.ndarray:
    """Rough estimate of log G_t(cos phi, cos psi), used only to size the precision."""
    a = max(params.alpha, -0.5)
    b = max(params.beta, -0.5)
    val = (
        -((phi - psi) ** 2) / (4 * t)
        - (a + 0.5) * np.log(t + phi * psi)
        - (b + 0.5) * np.log(t + (np.pi - phi) * (np.pi - psi))
        - 0.5 * math.log(t)
    )
    return val - 10.0


def _weights(params: JacobiParams, n: int, t: float, with_endpoint: bool):
    """MPFR weights exp(-t lambda_k) / h_k (times P_k(1) if requested), k <= n."""
    a, b = mpfr(params.alpha), mpfr(params.beta)
    s = a + b
    tt = mpfr(t)
    # h_0 and h_1 from log-gamma in binary64 would lose accuracy for the huge
    # dynamic range here, so both come from MPFR gamma functions
    if params.alpha + params.beta + 1 == 0:
        h0 = gmpy2.gamma(a + 1) * gmpy2.gamma(b + 1) / gmpy2.gamma(s + 2) * 2 ** (s + 1)
    else:
        h0 = 2 ** (s + 1) * gmpy2.gamma(a + 1) * gmpy2.gamma(b + 1) / ((s + 1) * gmpy2.gamma(s + 1))
    out = [1 / h0]
    if n == 0:
        return out
    h1 = 2 ** (s + 1) * gmpy2.gamma(a + 2) * gmpy2.gamma(b + 2) / ((s + 3) * gmpy2.gamma(s + 2))
    decay = gmpy2.exp(-tt * (s + 2))  # exp(-t lambda_1)
    step = gmpy2.exp(-2 * tt)
    w = decay / h1
    ratio_decay = decay
    h = h1
    at_one = a + 1
    out.append(w * at_one if with_endpoint else w)
    for k in range(2, n + 1):
        # lambda_k - lambda_{k-1} = 2k + a + b; exp(-t(2k+s)) = exp(-t(s+2)) e^{-2t(k-1)}
        ratio_decay = ratio_decay * step
        h = h * (k + a) * (k + b) * (2 * k + s - 1) / (k * (k + s) * (2 * k + s + 1))
        decay = decay * ratio_decay
        if with_endpoint:
            at_one = at_one * (k + a) / k
            out.append(decay * at_one / h)
        else:
            out.append(decay / h)
    return out


def _poly_table(params: JacobiParams, n: int, x: np.ndarray) -> np.ndarray:
    """Object array (n+1, len(x)) of P_k(x) in the current MPFR context."""
    a, b = mpfr(params.alpha), mpfr(params.beta)
    s = a + b
    xs = np.array([mpfr(float(v)) for v in x], dtype=object)
    out = np.empty((n + 1, xs.size), dtype=object)
    out[0] = mpfr(1)
    if n == 0:
        return out
    out[1] = (a - b) / 2 + (s + 2) / 2 * xs
    for k in range(2, n + 1):
        d = 2 * k * (k + s) * (2 * k + s - 2)
        ca = (2 * k + s - 1) * (a * a - b * b) / d
        cb = (2 * k + s - 2) * (2 * k + s - 1) * (2 * k + s) / d
        cc = 2 * (k + a - 1) * (k + b - 1) * (2 * k + s) / d
        out[k] = (ca + cb * xs) * out[k - 1] - cc * out[k - 2]
    return out


def _to_log(values, err_log: float) -> tuple[np.ndarray, np.ndarray]:
    """Logs of MPFR sums and a mask of entries resolved above the error bound."""
    flat = np.asarray(values, dtype=object).ravel()
    logs = np.empty(flat.size)
    for i, v in enumerate(flat):
        logs[i] = float(gmpy2.log(v)) if v > 0 else -np.inf
    ok = logs > err_log + _ACCEPT_NATS
    shape = np.shape(values)
    return logs.reshape(shape), ok.reshape(shape)


def _plan(params: JacobiParams, t: float, target_log: float, log_max: float, extra_bits: int):
    n = truncation_order(params, t, log_tol=target_log - _TAIL_NATS)
    bits = int(math.ceil((log_max - target_log + 2 * math.log(n + 2) + _ACCEPT_NATS) / _LN2)) + _GUARD_BITS
    return n, max(bits + extra_bits, 64)


def _run(params, t, target_log, compute, max_attempts=4):
    """Drive ``compute(n, bits) -> (logs, ok)`` with increasing precision."""
    log_max = log_series_max(params, t)
    extra = 0
    for _ in range(max_attempts):
        n, bits = _plan(params, t, target_log, log_max, extra)
        err_log = log_max + 2 * math.log(n + 2) - (bits - 8) * _LN2
        with gmpy2.context(gmpy2.get_context(), precision=bits):
            logs, ok = compute(n, err_log)
        if np.all(ok):
            return logs
        bad = logs[~ok]
        finite = bad[np.isfinite(bad)]
        lowest = float(finite.min()) if finite.size else target_log - 200.0
        target_log = min(target_log, lowest) - 50.0
        extra += 128
    raise PrecisionError("kernel value could not be resolved; it may be non-positive or extremely small")


def _angles(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-14):
        raise DomainError("arguments must lie in [-1, 1]")
    return np.arccos(np.clip(x, -1.0, 1.0))


def log_kernel_matrix(params: JacobiParams, xs, ys, t: float) -> np.ndarray:
    """log G_t(x_i, y_j) for all pairs; shape (len(xs), len(ys))."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    phi, psi = _angles(xs), _angles(ys)
    if not t > 0:
        raise DomainError("time must be positive")
    target = float(_guess_log(params, phi[:, None], psi[None, :], t).min())

    def compute(n, err_log):
        w = np.array(_weights(params, n, t, with_endpoint=False), dtype=object)
        px = _poly_table(params, n, xs)
        py = px if ys is xs else _poly_table(params, n, ys)
        s = (px * w[:, None]).T @ py
        return _to_log(s, err_log)

    return _run(params, t, target, compute)


def log_kernel(params: JacobiParams, x: float, y: float, t: float) -> float:
    """log G_t(x, y) for a single pair."""
    return float(log_kernel_matrix(params, [x], [y], t)[0, 0])


def log_kernel_at_one(params: JacobiParams, xs, t: float) -> np.ndarray:
    """log G_t(x_i, 1), using the closed-form endpoint values P_n(1)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    phi = _angles(xs)
    if not t > 0:
        raise DomainError("time must be positive")
    target = float(_guess_log(params, phi, np.zeros_like(phi), t).min())

    def compute(n, err_log):
        w = np.array(_weights(params, n, t, with_endpoint=True), dtype=object)
        px = _poly_table(params, n, xs)
        return _to_log(w @ px, err_log)

    return _run(params, t, target, compute)


# ---------------------------------------------------------------------------
# endpoint interpolation tables


_NODES_PER_PANEL = 16


@lru_cache(maxsize=None)
def _cheb_nodes(m: int):
    j = np.arange(m)
    x = -np.cos(np.pi * j / (m - 1))  # increasing, includes both ends
    w = (-1.0) ** j
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def _table_edges(t: float) -> np.ndarray:
    """Panel edges on [0, pi]: uniform away from pi, geometric towards it."""
    far = math.pi - 0.5
    edges = list(np.linspace(0.0, far, int(math.ceil(far / 0.25)) + 1))
    gap = 0.25
    floor = max(t / 2, 1e-7)
    while gap > floor:
        edges.append(math.pi - gap)
        gap /= 2
    edges.append(math.pi)
    return np.array(edges)


@dataclass
class EndpointTable:
    """Piecewise Chebyshev interpolant of r(theta) = log G_t(cos theta, 1) + theta^2/(4t).

    Panels are filled lazily from theta = 0 outwards; :meth:`ensure` extends
    the covered range. Angles beyond the covered range evaluate to -inf, which
    callers must only allow where the true kernel is negligible.
    """

    params: JacobiParams
    t: float
    edges: np.ndarray = field(init=False)
    values: list = field(init=False, default_factory=list)
    _lock: threading.Lock = field(init=False, default_factory=threading.Lock, repr=False)

    def __post_init__(self) -> None:
        self.edges = _table_edges(self.t)

    @property
    def covered(self) -> float:
        return float(self.edges[len(self.values)])

    def ensure(self, theta_max: float) -> None:
        theta_max = min(float(theta_max), math.pi)
        with self._lock:
            npan = int(np.searchsorted(self.edges, theta_max, side="left"))
            npan = max(npan, 1)
            if npan <= len(self.values):
                return
            xcheb, _ = _cheb_nodes(_NODES_PER_PANEL)
            new = []
            for i in range(len(self.values), npan):
                lo, hi = self.edges[i], self.edges[i + 1]
                new.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * xcheb)
            thetas = np.concatenate(new)
            # one precision per group of panels with similar magnitude
            groups = np.array_split(np.arange(len(new)), max(1, len(new) // 4))
            logs = np.empty(thetas.size)
            for g in groups:
                sl = slice(g[0] * _NODES_PER_PANEL, (g[-1] + 1) * _NODES_PER_PANEL)
                logs[sl] = log_kernel_at_one(self.params, np.cos(thetas[sl]), self.t)
            r = logs + thetas**2 / (4 * self.t)
            for i in range(len(new)):
                self.values.append(r[i * _NODES_PER_PANEL : (i + 1) * _NODES_PER_PANEL])

    def log_value(self, theta) -> np.ndarray:
        """log G_t(cos theta, 1); -inf beyond the covered range."""
        theta = np.asarray(theta, dtype=float)
        flat = theta.ravel()
        out = np.full(flat.shape, -np.inf)
        npan = len(self.values)
        if npan == 0:
            return out.reshape(theta.shape)
        inside = flat <= self.edges[npan]
        th = np.clip(flat[inside], 0.0, None)
        idx = np.clip(np.searchsorted(self.edges, th, side="right") - 1, 0, npan - 1)
        lo, hi = self.edges[idx], self.edges[idx + 1]
        s = (2 * th - lo - hi) / (hi - lo)
        xcheb, wcheb = _cheb_nodes(_NODES_PER_PANEL)
        vals = np.stack(self.values)[idx]  # (k, m)
        diff = s[:, None] - xcheb[None, :]
        exact = diff == 0
        diff[exact] = 1.0
        c = wcheb[None, :] / diff
        r = (c * vals).sum(axis=1) / c.sum(axis=1)
        hit = exact.any(axis=1)
        if np.any(hit):
            r[hit] = vals[hit][exact[hit]]
        out[inside] = r - th**2 / (4 * self.t)
        return out.reshape(theta.shape)


_TABLES: dict[tuple[float, float, float], EndpointTable] = {}
_TABLES_LOCK = threading.Lock()


def endpoint_table(params: JacobiParams, t: float) -> EndpointTable:
    """Process-wide cache of endpoint tables keyed by (alpha, beta, t)."""
    key = (params.alpha, params.beta, float(t))
    with _TABLES_LOCK:
        tab = _TABLES.get(key)
        if tab is None:
            tab = _TABLES[key] = EndpointTable(params, float(t))
    return tab


# ---------------------------------------------------------------------------
# graded integration of G_t(1 - gap, 1) against products of Pi measures

# exponent drop (nats) beyond which nodes are discarded
_DROP_NATS = 150.0


def _theta_from_gap(gap: np.ndarray) -> np.ndarray:
    """theta with 1 - cos(theta) = gap, accurate for tiny gaps."""
    return 2.0 * np.arcsin(np.sqrt(np.clip(gap / 2.0, 0.0, 1.0)))


def log_integral_linear(
    table: EndpointTable,
    gap0: float,
    coeffs,
    nus,
    *,
    m: int = 16,
    lowers=None,
    chunk: int = 400_000,
) -> float:
    """log of  int G_t(1 - gap0 - sum_j c_j (1 - u_j), 1) prod_j dPi_{nu_j}(u_j).

    Requires c_j >= 0 and gap0 >= 0, so the argument is largest at u = (1, ..., 1)
    and the integrand peaks there. Coordinates with c_j = 0 integrate to their
    total mass. ``lowers`` optionally restricts coordinates to [0, 1].
    """
    coeffs = [float(c) for c in coeffs]
    nus = [float(v) for v in nus]
    if lowers is None:
        lowers = [-1.0] * len(coeffs)
    if any(c < 0 for c in coeffs) or gap0 < 0:
        raise DomainError("coefficients and base gap must be non-negative")
    t = table.t
    theta0 = float(_theta_from_gap(np.array(gap0)))
    theta_cut = math.sqrt(theta0**2 + 4 * t * _DROP_NATS)
    table.ensure(theta_cut)
    gap_cut = 2.0 if theta_cut >= math.pi else 1.0 - math.cos(theta_cut)
    width = t * max(math.sin(theta0), math.sqrt(t))
    log_mass = 0.0
    axes = []
    for c, nu, lower in zip(coeffs, nus, lowers):
        rule_scale = 2.0 if c == 0 else max(min(width / (4 * c), 2.0), 1e-12)
        r = graded_rule(nu, rule_scale, lower=lower, m=m)
        if c == 0:
            log_mass += math.log(float(np.sum(r.weights)))
            continue
        keep = gap0 + c * r.gaps <= gap_cut
        axes.append((c * r.gaps[keep], np.log(r.weights[keep])))
    if not axes:
        return log_mass + float(table.log_value(theta0))
    # tensor product, in chunks along the first axis
    rest_g = np.zeros(1)
    rest_w = np.zeros(1)
    for g, lw in axes[1:]:
        rest_g = np.add.outer(rest_g, g).ravel()
        rest_w = np.add.outer(rest_w, lw).ravel()
        sel = gap0 + rest_g <= gap_cut
        rest_g, rest_w = rest_g[sel], rest_w[sel]
    g1, w1 = axes[0]
    step = max(1, chunk // max(rest_g.size, 1))
    acc = -np.inf
    for i in range(0, g1.size, step):
        gg = gap0 + np.add.outer(g1[i : i + step], rest_g).ravel()
        ww = np.add.outer(w1[i : i + step], rest_w).ravel()
        sel = gg <= gap_cut
        if not np.any(sel):
            continue
        vals = table.log_value(_theta_from_gap(gg[sel])) + ww[sel]
        acc = np.logaddexp(acc, np.logaddexp.reduce(vals))
    return float(acc) + log_mass
