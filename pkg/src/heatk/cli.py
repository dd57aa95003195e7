"""heatk command line: evaluate kernels and envelopes, run sweeps and checks.

Exit status: 0 on success, 1 when a verification or ratio check fails,
2 on malformed input.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import envelopes as env
from . import precise
from .jacobi_kernel import DEFAULT_TOL, T_MIN, heat_kernel
from .model_spaces import (
    FAMILIES,
    SpaceDescriptor,
    alpha_beta,
    ball_heat_kernel,
    default_catalog,
    log_ball_heat_kernel,
    log_simplex_heat_kernel,
    log_symmetric_heat_kernel,
    simplex_heat_kernel,
    symmetric_heat_kernel,
)
from .specfun import DomainError, JacobiParams
from .sweeps import (
    TARGETS,
    SweepSpec,
    default_spec,
    log_grid,
    refinement_stability,
    report_to_csv,
    report_to_json,
    run_ratio_sweep,
)
from .verify import IDENTITIES, run_identity_checks, run_varadhan_check

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
VARADHAN_TOL = 0.05
KERNEL_TARGETS = ("jacobi", "symmetric", "ball", "simplex")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# value parsing


def _floats(text: str | None, what: str) -> list[float]:
    if text is None or str(text).strip() == "":
        return []
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected a comma-separated list of numbers, got {text!r}") from None


def _one(text, what: str) -> float:
    vals = _floats(text, what)
    if len(vals) != 1:
        raise UsageError(f"{what}: expected exactly one number")
    return vals[0]


def _need(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required here")
    return value


def parse_space(name: str) -> SpaceDescriptor:
    """'CayleyPlane16', 'Sphere2', ... -> SpaceDescriptor."""
    m = re.fullmatch(r"([A-Za-z]+?)(\d+)", name.strip())
    if not m or m.group(1) not in FAMILIES:
        raise UsageError(f"unknown space {name!r}; use <family><d> with family in {', '.join(FAMILIES)}")
    try:
        return SpaceDescriptor(m.group(1), int(m.group(2)))
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _kappas(text: str | None) -> list[tuple[float, ...]]:
    """κ vectors: comma-separated components, several vectors separated by ';'."""
    if text is None:
        return []
    return [tuple(_floats(part, "--kappa")) for part in str(text).split(";") if part.strip()]


def read_config(path: str) -> dict[str, str]:
    """Line-oriented ``key = value`` file; '#' starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{no}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


# ---------------------------------------------------------------------------
# argument parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file supplying defaults for any flag")
    common.add_argument("--target", choices=TARGETS)
    common.add_argument("--alpha", help="alpha (comma list for sweeps)")
    common.add_argument("--beta", help="beta (comma list for sweeps)")
    common.add_argument("--mu", help="ball weight exponent (comma list for sweeps)")
    common.add_argument("--kappa", help="simplex weights, comma list; ';' separates several vectors")
    common.add_argument("--space", help="space name such as Sphere2 or CayleyPlane16 (comma list for sweeps)")
    common.add_argument("--dist", help="geodesic distance")
    common.add_argument("--t", help="time (comma list for sweeps and varadhan)")
    common.add_argument("--x", help="first point: cos(angle) for jacobi, coordinates otherwise")
    common.add_argument("--y", help="second point, same convention as --x")
    common.add_argument("--tol", help=f"series truncation tolerance (default {DEFAULT_TOL:g})")
    common.add_argument("--grid", help="spatial resolution of the sweep grid")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--workers", help="worker processes (fallback: HEATK_WORKERS)")

    parser = argparse.ArgumentParser(prog="heatk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("eval", parents=[common], help="one kernel and envelope value")
    sw = sub.add_parser("sweep", parents=[common], help="kernel/envelope ratios over a grid")
    sw.add_argument("--refine", action="store_true", help="also run the doubled grid and report the drift")
    ve = sub.add_parser("verify", parents=[common], help="residuals of the exact identities")
    ve.add_argument("which", nargs="*", help=f"subset of {', '.join(IDENTITIES)}")
    sub.add_parser("varadhan", parents=[common], help="small-time Gaussian exponent estimate")
    sub.add_parser("spaces", parents=[common], help="list the catalogued symmetric spaces")
    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    for key, value in read_config(args.config).items():
        if not hasattr(args, key) or key in ("command", "config"):
            raise UsageError(f"config: unknown key {key!r}")
        if getattr(args, key) in (None, False, []):
            if key == "refine":
                value = value.lower() in ("1", "true", "yes", "on")
            elif key == "which":
                value = [v.strip() for v in value.split(",") if v.strip()]
            setattr(args, key, value)


# ---------------------------------------------------------------------------
# output


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _rows_text(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows if len(rows) != 1 else rows[0], indent=2, default=float) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: format(v, ".17g") if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def _exp(v: float) -> float:
    return math.exp(v) if math.isfinite(v) else 0.0


# ---------------------------------------------------------------------------
# subcommands


def cmd_eval(args) -> int:
    target = _need(args.target, "--target")
    t = _one(_need(args.t, "--t"), "--t")
    tol = float(args.tol) if args.tol else DEFAULT_TOL
    row: dict = {"target": target, "t": t}
    if target == "jacobi":
        a = _one(_need(args.alpha, "--alpha"), "--alpha")
        b = _one(_need(args.beta, "--beta"), "--beta")
        x = _one(_need(args.x, "--x"), "--x")
        y = _one(_need(args.y, "--y"), "--y")
        p = JacobiParams(a, b)
        row.update(alpha=a, beta=b, x=x, y=y)
        kernel = float(heat_kernel(p, x, y, t, tol=tol))
        log_k = precise.log_kernel(p, x, y, t)
        log_e = env.env_jac_gen(a, b, math.acos(np.clip(x, -1, 1)), math.acos(np.clip(y, -1, 1)), t).log_value
    elif target == "symmetric":
        space = parse_space(_need(args.space, "--space"))
        dist = _one(_need(args.dist, "--dist"), "--dist")
        p = alpha_beta(space)
        row.update(space=space.name, d=space.d, d_tilde=space.d_tilde, dist=dist)
        kernel = float(symmetric_heat_kernel(space, dist, t, tol=tol))
        log_k = float(log_symmetric_heat_kernel(space, [dist], t)[0])
        log_e = env.env_symmetric(space.d, space.d_tilde, dist, t).log_value
    elif target == "ball":
        mu = _one(_need(args.mu, "--mu"), "--mu")
        x = _floats(_need(args.x, "--x"), "--x")
        y = _floats(_need(args.y, "--y"), "--y")
        row.update(mu=mu, x=";".join(map(repr, x)), y=";".join(map(repr, y)))
        kernel = ball_heat_kernel(mu, x, y, t, tol=tol)
        log_k = log_ball_heat_kernel(mu, x, y, t)
        log_e = env.env_ball(mu, len(x), x, y, t).log_value
    elif target == "simplex":
        kap = _kappas(_need(args.kappa, "--kappa"))
        if len(kap) != 1:
            raise UsageError("--kappa: give exactly one vector for eval")
        x = _floats(_need(args.x, "--x"), "--x")
        y = _floats(_need(args.y, "--y"), "--y")
        row.update(kappa=";".join(map(repr, kap[0])), x=";".join(map(repr, x)), y=";".join(map(repr, y)))
        kernel = simplex_heat_kernel(kap[0], x, y, t, tol=tol)
        log_k = log_simplex_heat_kernel(kap[0], x, y, t)
        log_e = env.env_simplex(kap[0], x, y, t).log_value
    else:
        raise UsageError(f"eval supports targets {', '.join(KERNEL_TARGETS)}")
    row.update(
        kernel=kernel,
        log_kernel=log_k,
        envelope=_exp(log_e),
        log_envelope=log_e,
        ratio=_exp(log_k - log_e),
    )
    _emit(_rows_text([row], args.format or "csv"), args.out)
    return EXIT_OK


def _sweep_params(args, target: str):
    if target == "jacobi":
        if args.alpha is None and args.beta is None:
            return None
        a = _floats(_need(args.alpha, "--alpha"), "--alpha")
        b = _floats(_need(args.beta, "--beta"), "--beta")
        return tuple(itertools.product(a, b))
    if target == "symmetric":
        return None if args.space is None else tuple(parse_space(s) for s in args.space.split(","))
    if target == "ball":
        if args.mu is None:
            return None
        dims = (2, 3) if args.x is None else (len(_floats(args.x, "--x")),)
        return tuple((mu, d) for d in dims for mu in _floats(args.mu, "--mu"))
    if target == "simplex":
        return None if args.kappa is None else tuple(_kappas(args.kappa))
    if target == "lemma21":
        return None
    if target == "lemma22":
        return None if args.alpha is None else tuple(_floats(args.alpha, "--alpha"))
    return None


def build_sweep_spec(args) -> SweepSpec:
    target = _need(args.target, "--target")
    spec = default_spec(target)
    changes: dict = {}
    params = _sweep_params(args, target)
    if params is not None:
        changes["params"] = params
    if args.t is not None:
        changes["t_grid"] = tuple(_floats(args.t, "--t"))
    if args.grid is not None:
        try:
            changes["resolution"] = int(args.grid)
        except ValueError:
            raise UsageError("--grid: expected an integer") from None
    if args.workers is not None:
        try:
            changes["workers"] = int(args.workers)
        except ValueError:
            raise UsageError("--workers: expected an integer") from None
    from dataclasses import replace

    return replace(spec, **changes)


def cmd_sweep(args) -> int:
    spec = build_sweep_spec(args)
    fmt = args.format or "csv"
    if args.refine:
        stab = refinement_stability(spec)
        report = stab.fine
        extra = {
            "min_change": stab.min_change,
            "max_change": stab.max_change,
            "threshold": stab.threshold,
            "stable": stab.ok,
        }
        ok = stab.ok and stab.base.ok and report.ok
    else:
        report = run_ratio_sweep(spec)
        extra = {}
        ok = report.ok
    if fmt == "json":
        data = json.loads(report_to_json(report, with_records=True))
        data.update(extra)
        text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    else:
        text = report_to_csv(report)
    _emit(text, args.out)
    spreads = report.group_spreads
    print(
        f"{spec.target}: {report.grid_size} cells, ratio in [{report.min_ratio:.4g}, {report.max_ratio:.4g}], "
        f"worst spread {max(spreads.values()) if spreads else math.nan:.4g}, failures {len(report.failures)}"
        + (f", refinement drift {extra['min_change']:.3g}/{extra['max_change']:.3g}" if extra else ""),
        file=sys.stderr,
    )
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    which = args.which or None
    if which:
        bad = [w for w in which if w not in IDENTITIES]
        if bad:
            raise UsageError(f"unknown identities {bad}; choose from {', '.join(IDENTITIES)}")
    results = run_identity_checks(which)
    rows = [
        {
            "identity": r.name,
            "max_residual": float(r.max_residual),
            "threshold": float(r.threshold),
            "checked": r.checked,
            "skipped": r.skipped,
            "passed": r.passed,
        }
        for r in results
    ]
    _emit(_rows_text(rows, args.format or "csv"), args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_varadhan(args) -> int:
    target = _need(args.target, "--target")
    times = _floats(args.t, "--t") or list(log_grid(1e-2, 1e-3, 5))
    if target == "jacobi":
        a = _one(args.alpha or "0", "--alpha")
        b = _one(args.beta or "0", "--beta")
        x = _one(_need(args.x, "--x"), "--x")
        y = _one(_need(args.y, "--y"), "--y")
        point = (a, b, math.acos(np.clip(x, -1, 1)), math.acos(np.clip(y, -1, 1)))
    elif target == "symmetric":
        point = (parse_space(_need(args.space, "--space")), _one(_need(args.dist, "--dist"), "--dist"))
    elif target == "ball":
        point = (_one(_need(args.mu, "--mu"), "--mu"), _floats(_need(args.x, "--x"), "--x"), _floats(_need(args.y, "--y"), "--y"))
    elif target == "simplex":
        kap = _kappas(_need(args.kappa, "--kappa"))
        if len(kap) != 1:
            raise UsageError("--kappa: give exactly one vector")
        point = (kap[0], _floats(_need(args.x, "--x"), "--x"), _floats(_need(args.y, "--y"), "--y"))
    else:
        raise UsageError(f"varadhan supports targets {', '.join(KERNEL_TARGETS)}")
    if min(times) < T_MIN:
        raise UsageError(f"--t: times must be at least {T_MIN:g}")
    rep = run_varadhan_check(target, point, times)
    rows = [
        {"target": target, "dist": rep.dist, "t": t, "log_kernel": lk, "ratio": r}
        for t, lk, r in zip(rep.times, rep.log_kernel, rep.ratios)
    ]
    _emit(_rows_text(rows, args.format or "csv"), args.out)
    print(
        f"{target}: estimate {rep.final:.6f} at t={min(rep.times):g} (divisor {rep.divisor:g}t), "
        f"drift {rep.drift:+.3g}, extrapolated {rep.extrapolated:.6f}",
        file=sys.stderr,
    )
    return EXIT_OK if abs(rep.final - 1.0) < VARADHAN_TOL else EXIT_FAIL


def cmd_spaces(args) -> int:
    rows = []
    for sp in default_catalog():
        p = alpha_beta(sp)
        rows.append({"name": sp.name, "family": sp.family, "d": sp.d, "d_tilde": sp.d_tilde, "alpha": p.alpha, "beta": p.beta})
    _emit(_rows_text(rows, args.format or "csv"), args.out)
    return EXIT_OK


COMMANDS = {
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "varadhan": cmd_varadhan,
    "spaces": cmd_spaces,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        _apply_config(args)
        return COMMANDS[args.command](args)
    except (UsageError, DomainError) as exc:
        print(f"heatk {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
