"""Kernel-over-envelope ratio sweeps.

A sweep walks a parameter grid, a time grid and a spatial grid, evaluates the
kernel (in log form) and its envelope at every cell, and reports the extreme
ratios. The work is split into blocks (one per parameter set and time) that
may run in worker processes; results are reassembled in block order so the
report does not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from . import envelopes as env
from .envelopes import _measure_integral_logs
from .jacobi_kernel import T_MIN
from .model_spaces import (
    SpaceDescriptor,
    alpha_beta,
    default_catalog,
    log_ball_heat_kernel,
    log_simplex_heat_kernel,
    log_symmetric_heat_kernel,
)
from .precise import log_kernel_matrix
from .specfun import DomainError, JacobiParams

__all__ = [
    "TARGETS",
    "SweepSpec",
    "RatioReport",
    "default_spec",
    "log_grid",
    "run_ratio_sweep",
    "refinement_stability",
    "StabilityReport",
    "report_to_csv",
    "report_to_json",
    "resolve_workers",
]

TARGETS = ("jacobi", "symmetric", "ball", "simplex", "lemma21", "lemma22")

RATIO_CEILING = 1e4


def log_grid(lo: float, hi: float, n: int) -> tuple[float, ...]:
    """n log-spaced values from lo to hi (inclusive)."""
    if n == 1:
        return (float(hi),)
    return tuple(float(v) for v in np.exp(np.linspace(math.log(lo), math.log(hi), n)))


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep.

    ``params`` holds one entry per parameter set; its meaning depends on the
    target: (alpha, beta) for jacobi, a SpaceDescriptor for symmetric,
    (mu, d) for ball, a kappa tuple for simplex, (nu, xi) for lemma21 and
    gamma for lemma22. ``t_grid`` holds times (D values for lemma21; unused by
    lemma22). ``resolution`` sets the spatial grid: points per angle axis, or
    the lattice denominator for the simplex.
    """

    target: str
    params: tuple
    t_grid: tuple[float, ...]
    resolution: int
    workers: int = 1
    t_min: float = T_MIN

    def __post_init__(self) -> None:
        if self.target not in TARGETS:
            raise DomainError(f"unknown target {self.target!r}; expected one of {TARGETS}")
        if not self.params:
            raise DomainError("parameter grid is empty")
        if self.target != "lemma22":
            if not self.t_grid:
                raise DomainError("time grid is empty")
            if self.target != "lemma21" and min(self.t_grid) < self.t_min:
                raise DomainError(f"times must be at least {self.t_min}")
        if self.resolution < 1:
            raise DomainError("resolution must be positive")
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))

    def refined(self) -> SweepSpec:
        """Every grid axis doubled; the refined grid contains the original one."""
        n_t = len(self.t_grid)
        if n_t > 1:
            t_grid = log_grid(self.t_grid[0], self.t_grid[-1], 2 * n_t - 1)
        else:
            t_grid = self.t_grid
        res = 2 * self.resolution if self.target == "simplex" else 2 * self.resolution - 1
        return replace(self, t_grid=t_grid, resolution=res)


@dataclass(frozen=True)
class RatioReport:
    """Extreme kernel/envelope ratios of a sweep (logs kept alongside)."""

    target: str
    grid_size: int
    min_log_ratio: float
    max_log_ratio: float
    argmin: dict
    argmax: dict
    records: tuple = field(default=(), repr=False)
    failures: tuple = ()
    groups: tuple = ()

    @property
    def min_ratio(self) -> float:
        return math.exp(self.min_log_ratio)

    @property
    def max_ratio(self) -> float:
        return math.exp(self.max_log_ratio)

    @property
    def spread(self) -> float:
        """max_ratio / min_ratio."""
        return math.exp(self.max_log_ratio - self.min_log_ratio)

    @property
    def group_spreads(self) -> dict[str, float]:
        """max/min ratio within each parameter set."""
        return {g: math.exp(hi - lo) for g, lo, hi in self.groups}

    @property
    def ok(self) -> bool:
        """No failed cell and every parameter set has a finite spread below the ceiling."""
        return (
            not self.failures
            and bool(self.groups)
            and all(math.isfinite(lo) and math.isfinite(hi) for _, lo, hi in self.groups)
            and all(v < RATIO_CEILING for v in self.group_spreads.values())
        )

    def summary(self) -> dict[str, Any]:
        return {
            "target": self.target,
            "grid_size": self.grid_size,
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "spread": self.spread,
            "argmin": self.argmin,
            "argmax": self.argmax,
            "groups": [
                {"params": g, "min_ratio": math.exp(lo), "max_ratio": math.exp(hi), "spread": math.exp(hi - lo)}
                for g, lo, hi in self.groups
            ],
            "failures": list(self.failures),
        }


# ---------------------------------------------------------------------------
# default grids

_JACOBI_PARAMS = tuple((a, b) for a in (-0.5, 0.0, 0.5, 1.0, 2.5) for b in (-0.5, 0.0, 0.5, 1.0, 2.5))
_BALL_PARAMS = tuple((mu, d) for d in (2, 3) for mu in (0.0, 0.5, 2.0))
_SIMPLEX_PARAMS = ((0.0, 0.0, 0.0), (0.5, 0.5, 0.5), (1.0, 0.0, 2.0))
_LEMMA21_PARAMS = tuple((nu, xi) for nu in (-0.5, 0.0, 1.0, 2.5) for xi in (-1.0, 0.0, 1.0, 2.0))
_LEMMA22_PARAMS = (-0.5, 0.0, 1.0, 3.0)


def default_spec(target: str, *, workers: int = 1) -> SweepSpec:
    """The built-in grid for a target (the coarse level of the stability check)."""
    times = log_grid(1e-3, 1.0, 6)
    if target == "jacobi":
        return SweepSpec(target, _JACOBI_PARAMS, times, 12, workers)
    if target == "symmetric":
        return SweepSpec(target, default_catalog(), times, 12, workers)
    if target == "ball":
        return SweepSpec(target, _BALL_PARAMS, times, 5, workers)
    if target == "simplex":
        return SweepSpec(target, _SIMPLEX_PARAMS, times, 3, workers)
    if target == "lemma21":
        return SweepSpec(target, _LEMMA21_PARAMS, log_grid(1e-3, 10.0, 9), 20, workers)
    if target == "lemma22":
        return SweepSpec(target, _LEMMA22_PARAMS, (), 11, workers)
    raise DomainError(f"unknown target {target!r}")


# ---------------------------------------------------------------------------
# blocks: each returns a list of (params dict, t, log_kernel, log_envelope)


def _angles(n: int) -> np.ndarray:
    return np.linspace(0.0, math.pi, n)


def _jacobi_block(param, t: float, res: int) -> list:
    a, b = param
    phis = _angles(res)
    logs = log_kernel_matrix(JacobiParams(a, b), np.cos(phis), np.cos(phis), t)
    out = []
    for i in range(res):
        for j in range(i, res):
            e = env.env_jac_gen(a, b, phis[i], phis[j], t).log_value
            out.append(({"alpha": a, "beta": b, "phi": phis[i], "psi": phis[j]}, t, float(logs[i, j]), e))
    return out


def _symmetric_block(space: SpaceDescriptor, t: float, res: int) -> list:
    dists = _angles(res)
    logs = log_symmetric_heat_kernel(space, dists, t)
    p = alpha_beta(space)
    out = []
    for r, lk in zip(dists, logs):
        e = env.env_symmetric(space.d, space.d_tilde, r, t).log_value
        cell = {"family": space.family, "d": space.d, "d_tilde": space.d_tilde, "alpha": p.alpha, "beta": p.beta, "dist": r}
        out.append((cell, t, float(lk), e))
    return out


def ball_pairs(d: int, res: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Point pairs x = r1 e1, y = r2 (cos g e1 + sin g e2) with r1 <= r2."""
    radii = np.linspace(0.0, 1.0, (res + 1) // 2)
    angles = _angles(res)
    e1, e2 = np.eye(d)[0], np.eye(d)[1]
    pairs = []
    for i, r1 in enumerate(radii):
        for r2 in radii[i:]:
            for g in angles:
                pairs.append((r1 * e1, r2 * (math.cos(g) * e1 + math.sin(g) * e2)))
    return pairs


def _fmt_point(p: np.ndarray) -> str:
    return ";".join(format(float(v), ".17g") for v in p)


def _ball_block(param, t: float, res: int) -> list:
    mu, d = param
    out = []
    for x, y in ball_pairs(d, res):
        lk = log_ball_heat_kernel(mu, x, y, t)
        e = env.env_ball(mu, d, x, y, t).log_value
        out.append(({"mu": mu, "d": d, "x": _fmt_point(x), "y": _fmt_point(y)}, t, lk, e))
    return out


def simplex_lattice(d: int, n: int) -> list[np.ndarray]:
    """Points of V^d whose coordinates are multiples of 1/n."""
    pts = []

    def rec(prefix, left):
        if len(prefix) == d:
            pts.append(np.array(prefix, dtype=float) / n)
            return
        for k in range(left + 1):
            rec(prefix + [k], left - k)

    rec([], n)
    return pts


def _simplex_block(param, t: float, res: int) -> list:
    kappa = tuple(float(k) for k in param)
    d = len(kappa) - 1
    pts = simplex_lattice(d, res)
    out = []
    for i, x in enumerate(pts):
        for y in pts[i:]:
            lk = log_simplex_heat_kernel(kappa, x, y, t)
            e = env.env_simplex(kappa, x, y, t).log_value
            cell = {"kappa": ";".join(format(k, "g") for k in kappa), "x": _fmt_point(x), "y": _fmt_point(y)}
            out.append((cell, t, lk, e))
    return out


def lemma21_grid(res: int) -> list[tuple[float, float]]:
    """Feasible (A, B): B uniform in [0, 1], A uniform in [-1, 1 - B]."""
    cells = []
    for B in np.linspace(0.0, 1.0, res):
        for A in np.linspace(-1.0, 1.0 - B, res):
            cells.append((float(A), float(B)))
    return cells


def _lemma21_block(param, D: float, res: int) -> list:
    nu, xi = param
    out = []
    for A, B in lemma21_grid(res):
        lhs, rhs = _measure_integral_logs(nu, [xi], A, B, D)
        out.append(({"nu": nu, "xi": xi, "A": A, "B": B, "D": D}, None, float(lhs[0]), float(rhs[0])))
    return out


def lemma22_grid(res: int) -> list[tuple[float, float]]:
    """a uniform in [0, 5]; b = a + h with h log-spaced in [1e-6, 10 - a].

    The ratio has a finite limit as b -> a; the log-spaced offsets reach
    that limit, so the extremes do not drift when the grid is refined.
    """
    cells = []
    for a in np.linspace(0.0, 5.0, res):
        for h in log_grid(1e-6, 10.0 - a, 2 * res - 1):
            cells.append((float(a), float(a + h)))
    return cells


def _lemma22_block(param, _t, res: int) -> list:
    gamma = float(param)
    out = []
    for a, b in lemma22_grid(res):
        lhs, rhs = env.lemma_f7_pair(gamma, a, b)
        out.append(({"gamma": gamma, "a": a, "b": b}, None, math.log(lhs), math.log(rhs)))
    return out


_BLOCKS = {
    "jacobi": _jacobi_block,
    "symmetric": _symmetric_block,
    "ball": _ball_block,
    "simplex": _simplex_block,
    "lemma21": _lemma21_block,
    "lemma22": _lemma22_block,
}


def _run_block(args):
    target, param, t, res = args
    try:
        return _BLOCKS[target](param, t, res), None
    except (ArithmeticError, DomainError) as exc:  # recorded, not fatal
        return [], {"param": repr(param), "t": t, "error": str(exc)}


def resolve_workers(workers: int | None) -> int:
    """Explicit count, else HEATK_WORKERS, else 1."""
    if workers and workers > 0:
        return int(workers)
    env_val = os.environ.get("HEATK_WORKERS", "").strip()
    if env_val:
        try:
            return max(1, int(env_val))
        except ValueError as exc:
            raise DomainError(f"HEATK_WORKERS must be an integer, got {env_val!r}") from exc
    return 1


def run_ratio_sweep(spec: SweepSpec) -> RatioReport:
    """Kernel/envelope ratios over the whole grid of ``spec``."""
    times = spec.t_grid if spec.target != "lemma22" else (None,)
    jobs = [(spec.target, p, t, spec.resolution) for p in spec.params for t in times]
    labels = [_label(p) for p in spec.params for _ in times]
    workers = resolve_workers(spec.workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, jobs))
    else:
        results = [_run_block(j) for j in jobs]
    records, failures = [], []
    extremes: dict[str, list[float]] = {}
    for label, (cells, failure) in zip(labels, results):
        if failure is not None:
            failures.append(failure)
        for cell, t, lk, le in cells:
            rec = {"cell_id": len(records), **cell, "t": t, "log_kernel": lk, "log_envelope": le, "log_ratio": lk - le}
            if not math.isfinite(rec["log_ratio"]):
                failures.append({"cell_id": rec["cell_id"], "error": "non-finite ratio"})
            else:
                ext = extremes.setdefault(label, [math.inf, -math.inf])
                ext[0] = min(ext[0], rec["log_ratio"])
                ext[1] = max(ext[1], rec["log_ratio"])
            records.append(rec)
    finite = [r for r in records if math.isfinite(r["log_ratio"])]
    if finite:
        lo = min(finite, key=lambda r: r["log_ratio"])
        hi = max(finite, key=lambda r: r["log_ratio"])
        lo_v, hi_v = lo["log_ratio"], hi["log_ratio"]
    else:
        lo = hi = {}
        lo_v, hi_v = math.nan, math.nan
    groups = tuple((g, v[0], v[1]) for g, v in extremes.items())
    return RatioReport(
        spec.target, len(records), lo_v, hi_v, dict(lo), dict(hi), tuple(records), tuple(failures), groups
    )


def _label(param) -> str:
    if isinstance(param, SpaceDescriptor):
        return param.name
    if isinstance(param, tuple):
        return "(" + ",".join(format(float(v), "g") for v in param) + ")"
    return format(float(param), "g")


@dataclass(frozen=True)
class StabilityReport:
    """A sweep at two grid levels; changes are relative, worst over parameter sets."""

    base: RatioReport
    fine: RatioReport
    min_change: float
    max_change: float
    threshold: float

    @property
    def ok(self) -> bool:
        return (
            self.base.ok
            and self.fine.ok
            and self.min_change < self.threshold
            and self.max_change < self.threshold
        )


def refinement_stability(spec: SweepSpec, *, threshold: float = 0.2) -> StabilityReport:
    """Run ``spec`` and its refinement and compare the extremes of every parameter set."""
    base = run_ratio_sweep(spec)
    fine = run_ratio_sweep(spec.refined())
    coarse = {g: (lo, hi) for g, lo, hi in base.groups}
    d_min = d_max = 0.0
    for g, lo, hi in fine.groups:
        if g not in coarse:
            d_min = d_max = math.inf
            continue
        d_min = max(d_min, abs(math.expm1(lo - coarse[g][0])))
        d_max = max(d_max, abs(math.expm1(hi - coarse[g][1])))
    return StabilityReport(base, fine, d_min, d_max, threshold)


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def report_to_csv(report: RatioReport) -> str:
    """Header target,cell_id,<params...>,t,kernel,envelope,ratio,log_kernel,log_envelope."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if not report.records:
        writer.writerow(["target", "cell_id", "t", "kernel", "envelope", "ratio", "log_kernel", "log_envelope"])
        return buf.getvalue()
    fixed = {"cell_id", "t", "log_kernel", "log_envelope", "log_ratio"}
    pkeys = [k for k in report.records[0] if k not in fixed]
    writer.writerow(["target", "cell_id", *pkeys, "t", "kernel", "envelope", "ratio", "log_kernel", "log_envelope"])
    for r in report.records:
        lk, le = r["log_kernel"], r["log_envelope"]
        writer.writerow(
            [
                report.target,
                r["cell_id"],
                *[_fmt(r[k]) for k in pkeys],
                _fmt(r["t"]),
                _fmt(math.exp(lk) if math.isfinite(lk) else 0.0),
                _fmt(math.exp(le) if math.isfinite(le) else 0.0),
                _fmt(math.exp(r["log_ratio"]) if math.isfinite(r["log_ratio"]) else math.nan),
                _fmt(lk),
                _fmt(le),
            ]
        )
    return buf.getvalue()


def report_to_json(report: RatioReport, *, with_records: bool = False) -> str:
    data = report.summary()
    if with_records:
        data["records"] = list(report.records)
    return json.dumps(data, indent=2, sort_keys=True, default=float)
