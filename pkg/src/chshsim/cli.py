"""Command-line surface: analytic evaluation, Monte Carlo runs, r-sweeps,
threshold solving, angle optimization, and Gaussian-source calibration.

Commands emit machine-readable reports (JSON by default; CSV for sweep-r)
with the full effective configuration echoed, so a report plus its seed
reproduces the run exactly.  ``--threads`` only changes scheduling, never a
result, and is therefore not part of the echoed configuration.

Exit codes: 0 success, 2 invalid arguments, 3 numerical-procedure failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone

from ._kernels import BACKEND
from .errors import (
    CalibrationError,
    EmptyRunError,
    InsufficientDataError,
    InvalidParameterError,
)
from .estimators import (
    CLASSICAL_BOUND,
    QUOTED_THRESHOLD_FIGURE,
    STANDARD_ANGLES,
    TSIRELSON_BOUND,
    AngleSet,
    analytic_chsh,
    estimate_p,
    mc_chsh,
    mc_e,
    violation_threshold,
)
from .noise import GaussianSignSource, calibrate_gaussian, sign_correlation
from .optimize import optimize_angles

DEFAULT_SEED = 12345
DEFAULT_TRIALS = 1_000_000
DEFAULT_ANGLES = ",".join(str(t) for t in STANDARD_ANGLES.as_tuple())

THRESHOLD_NOTE = (
    "threshold_r solves S(r) = 2 by bisection. For the standard angles "
    "(0, 22.5, 45, 67.5) S = sqrt(2) + r, giving r* = 2 - sqrt(2) = "
    "0.5857864376...; the often-quoted figure 0.656 for this configuration "
    "is inconsistent with that closed form and is reported for comparison only."
)


def _angles_argument(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            f"expected four comma-separated angles in degrees, got {text!r}"
        )
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="base seed for all random streams (default %(default)s)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker-thread cap; never affects results (default %(default)s)")
    common.add_argument("--format", choices=("json", "csv", "human"), default=None,
                        help="output format (default: json; sweep-r: csv)")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp field (for byte-exact comparisons)")

    parser = argparse.ArgumentParser(
        prog="chshsim",
        description="CHSH Bell-test simulator for classical beams with "
        "noise-correlated polarizations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", parents=[common],
                       help="exact estimators, S, verdict and threshold at given angles")
    p.add_argument("--angles", type=_angles_argument, default=None,
                   help=f"four detector angles in degrees (default {DEFAULT_ANGLES})")
    p.add_argument("--r", type=float, default=0.8, help="pair correlation (default %(default)s)")

    p = sub.add_parser("simulate", parents=[common],
                       help="Monte Carlo CHSH run with per-pair statistics")
    p.add_argument("--angles", type=_angles_argument, default=None)
    p.add_argument("--r", type=float, default=0.8)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS,
                   help="trials per detector pairing (default %(default)s)")
    p.add_argument("--source", choices=("rtw", "gaussian"), default="rtw",
                   help="noise source driving the polarizations (default %(default)s)")
    p.add_argument("--rho", type=float, default=None,
                   help="latent Gaussian correlation; default: calibrated to --r")

    p = sub.add_parser("sweep-r", parents=[common],
                       help="analytic and Monte Carlo S over a range of r")
    p.add_argument("--angles", type=_angles_argument, default=None)
    p.add_argument("--r-from", type=float, default=-1.0)
    p.add_argument("--r-to", type=float, default=1.0)
    p.add_argument("--r-step", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)

    p = sub.add_parser("optimize", parents=[common],
                       help="search the angle space for maximal S at fixed r")
    p.add_argument("--r", type=float, default=0.8)
    p.add_argument("--grid-step", type=float, default=7.5,
                   help="lattice spacing in degrees (default %(default)s)")
    p.add_argument("--tolerance", type=float, default=1e-9,
                   help="refinement stop when a cycle gains at most this (default %(default)s)")
    p.add_argument("--trace", action="store_true", help="include improvement steps")

    p = sub.add_parser("calibrate", parents=[common],
                       help="latent Gaussian correlation for a target sign correlation")
    p.add_argument("--target-r", type=float, default=0.8)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS,
                   help="trials for the empirical verification run (default %(default)s)")

    p = sub.add_parser("threshold", parents=[common],
                       help="smallest r with S(r) = 2 at given angles")
    p.add_argument("--angles", type=_angles_argument, default=None)

    return parser


def _angle_set(args) -> AngleSet:
    if getattr(args, "angles", None) is None:
        return STANDARD_ANGLES
    return AngleSet(*args.angles)


def _resolve_format(args, allowed):
    fmt = args.format or allowed[0]
    if fmt not in allowed:
        raise InvalidParameterError(
            f"--format {fmt} is not supported by this command (allowed: {', '.join(allowed)})"
        )
    return fmt


def _finish(report, args):
    if not args.no_timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
    return report


def _validate_threads(args):
    if args.threads < 1:
        raise InvalidParameterError("--threads must be at least 1")


# --- command implementations ----------------------------------------------


def cmd_analytic(args):
    fmt = _resolve_format(args, ("json", "human"))
    angles = _angle_set(args)
    result = analytic_chsh(angles, args.r)
    report = {
        "command": "analytic",
        "backend": BACKEND,
        "config": {
            "angles": list(angles.as_tuple()),
            "r": float(args.r),
            "seed": args.seed,
            "format": fmt,
        },
        "e_ab": result.e_ab,
        "e_ad": result.e_ad,
        "e_cb": result.e_cb,
        "e_cd": result.e_cd,
        "s_value": result.s_value,
        "violated": result.violated,
        "violation_threshold": violation_threshold(angles),
        "classical_bound": CLASSICAL_BOUND,
        "tsirelson_bound": TSIRELSON_BOUND,
    }
    return _finish(report, args), fmt


def _pair_report(name, stats):
    p_vv, p_hh, p_vh, p_hv = estimate_p(stats)
    e, se = mc_e(stats)
    return {
        "pair": name,
        "theta_i": stats.theta_i,
        "theta_j": stats.theta_j,
        "trials": stats.total_trials,
        "counts": stats.trial_counts,
        "p_vv": p_vv,
        "p_hh": p_hh,
        "p_vh": p_vh,
        "p_hv": p_hv,
        "e": e,
        "std_err": se,
    }


def cmd_simulate(args):
    fmt = _resolve_format(args, ("json", "human"))
    _validate_threads(args)
    angles = _angle_set(args)
    rho = args.rho
    if args.source == "gaussian" and rho is None:
        rho = calibrate_gaussian(args.r)
    result = mc_chsh(
        args.r,
        angles,
        args.trials,
        args.seed,
        threads=args.threads,
        source=args.source,
        rho=rho,
    )
    reference = analytic_chsh(angles, args.r)
    delta = result.s_value - reference.s_value
    pair_names = [name for name, _, _ in angles.pairings()]
    report = {
        "command": "simulate",
        "backend": BACKEND,
        "config": {
            "angles": list(angles.as_tuple()),
            "r": float(args.r),
            "trials_per_pair": args.trials,
            "seed": args.seed,
            "source": args.source,
            "rho": rho,
            "format": fmt,
        },
        "pairs": [
            _pair_report(name, stats)
            for name, stats in zip(pair_names, result.pair_stats)
        ],
        "s_mc": result.s_value,
        "std_err": result.std_err,
        "violated": result.violated,
        "s_analytic": reference.s_value,
        "delta": delta,
        "z_score": delta / result.std_err if result.std_err > 0.0 else None,
        "classical_bound": CLASSICAL_BOUND,
        "tsirelson_bound": TSIRELSON_BOUND,
    }
    return _finish(report, args), fmt


def cmd_sweep_r(args):
    fmt = _resolve_format(args, ("csv", "json", "human"))
    _validate_threads(args)
    angles = _angle_set(args)
    if args.r_step <= 0.0:
        raise InvalidParameterError("--r-step must be positive")
    if args.r_from > args.r_to:
        raise InvalidParameterError("--r-from must not exceed --r-to")

    rows = []
    index = 0
    while True:
        # snap accumulated grid values (0.4 + 2*0.1 -> 0.6000000000000001)
        r = round(args.r_from + index * args.r_step, 12)
        if r > args.r_to + 1e-12:
            break
        r = min(r, args.r_to)
        exact = analytic_chsh(angles, r)
        # distinct stream block per row so rows are independent
        sim = mc_chsh(r, angles, args.trials, args.seed,
                      threads=args.threads, stream_base=4 * index)
        rows.append({
            "r": r,
            "s_analytic": exact.s_value,
            "s_mc": sim.s_value,
            "std_err": sim.std_err,
            "violated_analytic": exact.violated,
            "violated_mc": sim.violated,
        })
        index += 1
    report = {
        "command": "sweep-r",
        "backend": BACKEND,
        "config": {
            "angles": list(angles.as_tuple()),
            "r_from": args.r_from,
            "r_to": args.r_to,
            "r_step": args.r_step,
            "trials_per_pair": args.trials,
            "seed": args.seed,
            "format": fmt,
        },
        "rows": rows,
    }
    return _finish(report, args), fmt


def cmd_optimize(args):
    fmt = _resolve_format(args, ("json", "human"))
    result = optimize_angles(
        args.r, grid_step=args.grid_step, tolerance=args.tolerance,
        include_trace=args.trace,
    )
    report = {
        "command": "optimize",
        "backend": BACKEND,
        "config": {
            "r": float(args.r),
            "grid_step": args.grid_step,
            "tolerance": args.tolerance,
            "trace": bool(args.trace),
            "seed": args.seed,
            "format": fmt,
        },
        "best_angles": list(result.best_angles.as_tuple()),
        "best_s": result.best_s,
        "violated": result.best_s > CLASSICAL_BOUND,
        "evaluations": result.evaluations,
        "reference_max": math.sqrt(2.0) + abs(float(args.r)),
        "classical_bound": CLASSICAL_BOUND,
    }
    if args.trace:
        report["trace"] = [
            {"angles": list(a.as_tuple()), "s": s} for a, s in result.trace
        ]
    return _finish(report, args), fmt


def cmd_calibrate(args):
    fmt = _resolve_format(args, ("json", "human"))
    _validate_threads(args)
    report = {
        "command": "calibrate",
        "backend": BACKEND,
        "config": {
            "target_r": float(args.target_r),
            "tolerance": args.tolerance,
            "trials": args.trials,
            "seed": args.seed,
            "format": fmt,
        },
    }
    try:
        rho = calibrate_gaussian(args.target_r, tolerance=args.tolerance)
    except CalibrationError as exc:
        report["error"] = str(exc)
        report["best_rho"] = exc.best_rho
        report["achieved_r"] = exc.achieved
        return _finish(report, args), fmt, 3
    source = GaussianSignSource(rho, seed=args.seed, stream_id=0)
    achieved, se = sign_correlation(source, args.trials, threads=args.threads)
    report.update({
        "rho": rho,
        "achieved_r": achieved,
        "std_err": se,
        "residual": achieved - float(args.target_r),
    })
    return _finish(report, args), fmt


def cmd_threshold(args):
    fmt = _resolve_format(args, ("json", "human"))
    angles = _angle_set(args)
    report = {
        "command": "threshold",
        "backend": BACKEND,
        "config": {
            "angles": list(angles.as_tuple()),
            "seed": args.seed,
            "format": fmt,
        },
        "threshold_r": violation_threshold(angles),
        "s_at_r_minus_1": analytic_chsh(angles, -1.0).s_value,
        "s_at_r_plus_1": analytic_chsh(angles, 1.0).s_value,
        "classical_bound": CLASSICAL_BOUND,
        "quoted_threshold_figure": QUOTED_THRESHOLD_FIGURE,
        "note": THRESHOLD_NOTE,
    }
    return _finish(report, args), fmt


# --- rendering --------------------------------------------------------------


def _fmt_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    if value is None:
        return "null"
    return str(value)


def _human_lines(report, prefix=""):
    for key, value in report.items():
        if isinstance(value, dict):
            yield from _human_lines(value, prefix=f"{prefix}{key}.")
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            for i, item in enumerate(value):
                yield from _human_lines(item, prefix=f"{prefix}{key}[{i}].")
        elif isinstance(value, list):
            yield f"{prefix}{key} = {', '.join(_fmt_value(v) for v in value)}"
        else:
            yield f"{prefix}{key} = {_fmt_value(value)}"


SWEEP_CSV_COLUMNS = (
    "r", "s_analytic", "s_mc", "std_err", "violated_analytic", "violated_mc",
)


def _csv_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def render(report, fmt) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    if fmt == "human":
        return "\n".join(_human_lines(report)) + "\n"
    # CSV: configuration echo as comment lines, then a strict CSV body
    lines = [f"# config: {json.dumps(report['config'], separators=(',', ':'))}"]
    if "timestamp" in report:
        lines.append(f"# timestamp: {report['timestamp']}")
    lines.append(",".join(SWEEP_CSV_COLUMNS))
    for row in report["rows"]:
        lines.append(",".join(_csv_cell(row[col]) for col in SWEEP_CSV_COLUMNS))
    return "\n".join(lines) + "\n"


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "sweep-r": cmd_sweep_r,
    "optimize": cmd_optimize,
    "calibrate": cmd_calibrate,
    "threshold": cmd_threshold,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        outcome = COMMANDS[args.command](args)
    except (InvalidParameterError, EmptyRunError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CalibrationError as exc:
        # calibrate renders its own failure report; other commands reach here
        print(f"error: {exc}", file=sys.stderr)
        return 3
    report, fmt, *rest = outcome
    sys.stdout.write(render(report, fmt))
    return rest[0] if rest else 0


if __name__ == "__main__":
    sys.exit(main())
