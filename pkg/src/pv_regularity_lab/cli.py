# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Command line entry point: simulate, monitor, exponents, norms, calibrate and verify."""

import argparse
import json
import sys
import time
from collections.abc import Sequence
from datetime import datetime, timezone
from pathlib import Path

from .calibration import calibrate, corpus_velocities
from .config import RunConfig, load_run_config
from .errors import ExponentOutOfRange, FormatError, ValidationError
from .exponents import INFINITY, PositiveInfinity, as_rational, conjugate_split, format_rational, parse_extended
from .fields import VectorField
from .lab_config import (
    CALIBRATION_SEEDS,
    DEFAULT_EPSILON,
    EXIT_IO_ERROR,
    EXIT_SUCCESS,
    EXIT_USAGE_ERROR,
    EXIT_VERDICT_FAILURE,
    MANIFEST_FILENAME,
    SEPARATOR_LONG,
)
from .logger import get_logger, set_package_log_level
from .lorentz import lebesgue_norm, lorentz_quasi_norm
from .monitor import MonitorConfig, run_monitor, write_report
from .registry import read_registry_or_default, write_registry
from .snapshots import read_snapshot
from .solver import load_trajectory, simulate
from .verification import print_verification_summary, save_verification_results, verify

UTC = timezone.utc  # datetime.UTC alias (Python 3.11+)

logger = get_logger(__name__)


def _load_config(path: str) -> RunConfig:
    config = load_run_config(path)
    set_package_log_level(config.log_level)
    return config


def _banner(title: str, **details: object) -> None:
    logger.info(f"\n{SEPARATOR_LONG}")
    logger.info(title)
    logger.info(SEPARATOR_LONG)
    for key, value in details.items():
        logger.info(f"{key.replace('_', ' ').capitalize()}: {value}")
    logger.info(f"{SEPARATOR_LONG}\n")


def command_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    output_dir = Path(args.out) if args.out else config.trajectory_dir
    _banner("P-V LAB SIMULATION", config_hash=config.config_hash, output_directory=output_dir)
    simulate(config.solver, output_dir, config.config_hash)
    logger.info(f"\n[OK] Trajectory written to {output_dir / MANIFEST_FILENAME}\n")
    return EXIT_SUCCESS


def command_monitor(args: argparse.Namespace) -> int:
    start = time.time()
    manifest, states = load_trajectory(args.traj)
    cfg = MonitorConfig(
        theta=args.theta,
        q=args.q,
        p=args.p,
        epsilon=args.epsilon,
        torus_weight=not args.gauss_weight,
        constants=read_registry_or_default(args.registry),
    )
    _banner("P-V LAB MONITOR", trajectory=args.traj, config_hash=manifest.config_hash or "(none)")
    report = run_monitor(states, cfg, manifest.viscosity, manifest.config_hash)
    write_report(report, args.out, meta={"created": datetime.now(UTC).isoformat(), "duration": time.time() - start})

    if not report.passed:
        names = ", ".join(v.name for v in report.failed_verdicts)
        logger.warning(f"\n[FAIL] {len(report.failed_verdicts)} verdict(s) failed: {names}\n")
        return EXIT_VERDICT_FAILURE
    logger.info(f"\n[OK] All {len(report.verdicts)} verdicts passed\n")
    return EXIT_SUCCESS


def command_exponents(args: argparse.Namespace) -> int:
    solution = conjugate_split(args.theta, args.q)
    payload = solution.to_json_dict()
    payload["classification"] = MonitorConfig(theta=args.theta, q=args.q).classification.value
    logger.info(json.dumps(payload, indent=2))
    return EXIT_SUCCESS


def command_norms(args: argparse.Namespace) -> int:
    data = read_snapshot(args.field)
    f = data.magnitude() if isinstance(data, VectorField) else data
    if isinstance(args.p, PositiveInfinity):
        if not isinstance(args.q, PositiveInfinity):
            raise ExponentOutOfRange("p = inf is only defined together with q = inf")
        value = lebesgue_norm(f, INFINITY)
    else:
        value = lorentz_quasi_norm(f, args.p, args.q)
    logger.info(json.dumps({"p": format_rational(args.p), "q": format_rational(args.q), "value": value}, indent=2))
    return EXIT_SUCCESS


def command_calibrate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    target = Path(args.out) if args.out else config.registry_path
    _banner("P-V LAB CALIBRATION", config_hash=config.config_hash, registry=target)

    velocities = corpus_velocities(config.solver.grid, args.seeds)
    manifest_path = config.trajectory_dir / MANIFEST_FILENAME
    if manifest_path.exists():
        _, states = load_trajectory(manifest_path, config.config_hash)
        velocities += [s.v for s in states]
    registry, _ = calibrate(velocities, config.chain_pairs, config.monitor.torus_weight, config.monitor.constants)
    write_registry(registry, target, config.config_hash)
    logger.info(f"\n[OK] Calibrated {len(velocities)} fields\n")
    return EXIT_SUCCESS


def command_verify(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    summary = verify(config)
    save_verification_results(summary, config.output_dir)
    print_verification_summary(summary)

    if summary.failed_count > 0:
        logger.warning(f"\nVerification completed with {summary.failed_count} failure(s)\n")
        return EXIT_VERDICT_FAILURE
    logger.info(f"\nAll {summary.passed_count} check(s) passed!\n")
    return EXIT_SUCCESS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvlab", description="Numerical laboratory for the mixed pressure-velocity regularity criterion"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate_parser = subparsers.add_parser("simulate", help="Integrate Navier-Stokes and write a trajectory")
    simulate_parser.add_argument("--config", required=True, help="Run configuration (.conf or .yaml)")
    simulate_parser.add_argument("--out", help="Trajectory directory (default: <output_dir>/trajectory)")
    simulate_parser.set_defaults(handler=command_simulate)

    monitor_parser = subparsers.add_parser("monitor", help="Evaluate the ledger and estimate chain on a trajectory")
    monitor_parser.add_argument("--traj", required=True, help="Trajectory manifest")
    monitor_parser.add_argument("--theta", required=True, type=as_rational, help="Mixing exponent in [0, 1]")
    monitor_parser.add_argument("--q", required=True, type=as_rational, help="Weak Lorentz exponent")
    monitor_parser.add_argument("--p", type=as_rational, help="Time exponent (derived from the line if omitted)")
    monitor_parser.add_argument("--epsilon", type=as_rational, default=DEFAULT_EPSILON, help="Young parameter")
    monitor_parser.add_argument("--registry", help="Constants registry (unit constants if omitted)")
    monitor_parser.add_argument("--gauss-weight", action="store_true", help="Use exp(-|x|^2) on the torus")
    monitor_parser.add_argument("--out", required=True, help="Report directory")
    monitor_parser.set_defaults(handler=command_monitor)

    exponents_parser = subparsers.add_parser("exponents", help="Print the exponent solution for (theta, q)")
    exponents_parser.add_argument("--theta", required=True, type=as_rational)
    exponents_parser.add_argument("--q", required=True, type=as_rational)
    exponents_parser.set_defaults(handler=command_exponents)

    norms_parser = subparsers.add_parser("norms", help="Lorentz norm of a snapshot field")
    norms_parser.add_argument("--field", required=True, help="Snapshot file (vector fields use |v|)")
    norms_parser.add_argument("--p", required=True, type=parse_extended)
    norms_parser.add_argument("--q", required=True, type=parse_extended)
    norms_parser.set_defaults(handler=command_norms)

    calibrate_parser = subparsers.add_parser("calibrate", help="Calibrate the constants registry")
    calibrate_parser.add_argument("--config", required=True, help="Run configuration (.conf or .yaml)")
    calibrate_parser.add_argument("--out", help="Registry path (default: run.registry_path)")
    calibrate_parser.add_argument("--seeds", type=int, default=CALIBRATION_SEEDS, help="Random corpus size")
    calibrate_parser.set_defaults(handler=command_calibrate)

    verify_parser = subparsers.add_parser("verify", help="Run the full inequality suite")
    verify_parser.add_argument("--config", required=True, help="Run configuration (.conf or .yaml)")
    verify_parser.set_defaults(handler=command_verify)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Dispatch a subcommand and map failures onto exit codes.

    Returns:
        0 on success, 1 on a failed verdict, 2 on a usage or validation error,
        3 on an IO or file format error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_SUCCESS if e.code in (0, None) else EXIT_USAGE_ERROR

    try:
        return int(args.handler(args))
    except ValidationError as e:
        logger.error(f"\n[FAIL] VALIDATION ERROR: {e!s}\n")
        return EXIT_USAGE_ERROR
    except (FormatError, OSError) as e:
        logger.error(f"\n[FAIL] IO ERROR: {e!s}\n")
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
