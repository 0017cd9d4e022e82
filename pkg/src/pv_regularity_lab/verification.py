# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Full verification pipeline with continue-on-failure checks."""

from __future__ import annotations

import json
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Any

from .calibration import calibrate, corpus_velocities
from .config import RunConfig
from .errors import HashMismatch
from .exponents import (
    absorption_exponent,
    check_solution,
    closing_identity,
    conjugate_split,
    format_rational,
    mixed_pv_line,
    solve_p,
)
from .fields import divergence_max
from .lab_config import (
    MANIFEST_FILENAME,
    SEPARATOR_LONG,
    SEPARATOR_SHORT,
    SOLENOIDAL_TOLERANCE,
    VERIFICATION_META_FILENAME,
    VERIFICATION_RESULTS_FILENAME,
)
from .logger import get_logger
from .monitor import MonitorConfig, run_monitor, write_report
from .registry import ConstantsRegistry, read_registry, registry_config_hash, write_registry
from .solver import FlowState, energy_budget, load_trajectory, simulate

UTC = timezone.utc  # datetime.UTC alias (Python 3.11+)

logger = get_logger(__name__)

ENERGY_BUDGET_TOLERANCE = 1e-6


@dataclass
class VerdictResult:
    """Result of a single verification check.

    Attributes:
        name: Check identifier, prefixed by its (theta, q) pair where relevant
        passed: Whether the check held
        margin: Worst relative margin, when the check measures one
        error_message: Error text if the check raised (empty string otherwise)
    """

    name: str
    passed: bool
    margin: float | None = None
    error_message: str = ""


@dataclass
class VerificationSummary:
    """Summary of a verification run.

    Attributes:
        config_hash: Hash of the run configuration
        duration: Wall-clock duration in seconds (kept out of the deterministic results file)
        results: One result per check
    """

    config_hash: str
    duration: float
    results: list[VerdictResult]

    @property
    def total_checks(self) -> int:
        return len(self.results)

    @property
    def passed_count(self) -> int:
        return sum(1 for r in self.results if r.passed)

    @property
    def failed_count(self) -> int:
        return sum(1 for r in self.results if not r.passed)


def pair_label(theta: Fraction, q: Fraction) -> str:
    return f"theta={format_rational(theta)},q={format_rational(q)}"


def _pair_directory(theta: Fraction, q: Fraction) -> str:
    return f"theta_{format_rational(theta)}_q_{format_rational(q)}".replace("/", "-")


def run_check(name: str, check: Callable[[], tuple[bool, float | None]]) -> VerdictResult:
    """Run one check; an exception becomes a failed result instead of aborting the suite."""
    try:
        passed, margin = check()
    except Exception as e:
        logger.error(f"  [FAIL] {name}: {e}")
        return VerdictResult(name=name, passed=False, error_message=str(e))
    marker = "[OK]" if passed else "[FAIL]"
    logger.info(f"  {marker} {name}" + ("" if margin is None else f" (margin {margin:.3e})"))
    return VerdictResult(name=name, passed=passed, margin=margin)


def exponent_identities(theta: Fraction, q: Fraction) -> tuple[bool, float | None]:
    """Exact identities of the conjugate split; raises if any relation fails."""
    solution = conjugate_split(theta, q)
    check_solution(solution)
    exact = closing_identity(solution) == 2 - theta and absorption_exponent(solution) == solve_p(
        mixed_pv_line(theta), q
    )
    return exact, None


def divergence_check(states: Sequence[FlowState]) -> tuple[bool, float | None]:
    worst = max(divergence_max(s.v) for s in states)
    return worst <= SOLENOIDAL_TOLERANCE, SOLENOIDAL_TOLERANCE - worst


def energy_check(states: Sequence[FlowState], viscosity: float) -> tuple[bool, float | None]:
    excess = energy_budget(states, viscosity).worst_relative_excess()
    return excess <= ENERGY_BUDGET_TOLERANCE, -excess


def obtain_trajectory(config: RunConfig) -> list[FlowState]:
    """Load the trajectory written for this configuration, or simulate and persist it.

    Raises:
        HashMismatch: If an existing trajectory was produced by a different configuration
    """
    manifest_path = config.trajectory_dir / MANIFEST_FILENAME
    if manifest_path.exists():
        logger.info(f"-> Reusing trajectory {manifest_path}")
        _, states = load_trajectory(manifest_path, config.config_hash)
        return states
    return simulate(config.solver, config.trajectory_dir, config.config_hash)


def obtain_registry(config: RunConfig, states: Sequence[FlowState]) -> ConstantsRegistry:
    """Read the registry written for this configuration, or calibrate and write one.

    Raises:
        HashMismatch: If the registry header names a different configuration
    """
    path = config.registry_path
    if path.exists():
        recorded = registry_config_hash(path.read_text(encoding="utf-8"))
        if recorded is not None and recorded != config.config_hash:
            raise HashMismatch(
                f"Registry {path} was calibrated for configuration {recorded}, not {config.config_hash}"
            )
        return read_registry(path)
    velocities = corpus_velocities(config.solver.grid) + [s.v for s in states]
    registry, _ = calibrate(velocities, config.chain_pairs, config.monitor.torus_weight, config.monitor.constants)
    write_registry(registry, path, config.config_hash)
    return registry


def pair_config(config: RunConfig, theta: Fraction, q: Fraction, constants: ConstantsRegistry) -> MonitorConfig:
    """Monitor configuration for one sweep pair; p is re-derived except for the configured pair."""
    p = config.monitor.p if (theta, q) == (config.monitor.theta, config.monitor.q) else None
    return replace(config.monitor, theta=theta, q=q, p=p, constants=constants)


def verify(config: RunConfig) -> VerificationSummary:
    """Run the whole inequality suite for a configuration.

    The trajectory and the registry are reused when present and produced by the
    same configuration, otherwise they are computed and written. Every check
    runs even when an earlier one fails.

    Args:
        config: Parsed run configuration

    Returns:
        VerificationSummary with one VerdictResult per check

    Raises:
        HashMismatch: If existing artifacts belong to a different configuration
    """
    start = time.time()
    logger.info(f"\n{SEPARATOR_LONG}")
    logger.info("P-V REGULARITY VERIFICATION")
    logger.info(SEPARATOR_LONG)
    logger.info(f"Config hash: {config.config_hash}")
    logger.info(f"Output directory: {config.output_dir}")
    logger.info(f"{SEPARATOR_LONG}\n")

    states = obtain_trajectory(config)
    registry = obtain_registry(config, states)
    viscosity = config.solver.viscosity
    pairs = config.chain_pairs

    results: list[VerdictResult] = []
    for theta, q in pairs:
        results.append(run_check(f"{pair_label(theta, q)}/exponent_identities", partial(exponent_identities, theta, q)))
    results.append(run_check("trajectory/divergence", lambda: divergence_check(states)))
    results.append(run_check("trajectory/energy_budget", lambda: energy_check(states, viscosity)))

    for i, (theta, q) in enumerate(pairs, 1):
        label = pair_label(theta, q)
        logger.info(f"\n{SEPARATOR_SHORT}")
        logger.info(f"[{i}/{len(pairs)}] Monitoring {label}")
        logger.info(SEPARATOR_SHORT)
        try:
            pair_start = time.time()
            cfg = pair_config(config, theta, q, registry)
            report = run_monitor(states, cfg, viscosity, config.config_hash)
            write_report(
                report,
                config.monitor_dir / _pair_directory(theta, q),
                meta={"created": _timestamp(), "duration": time.time() - pair_start},
            )
        except Exception as e:
            logger.error(f"\n[FAIL] ERROR: Monitor failed for {label}: {e}\n")
            results.append(VerdictResult(name=f"{label}/monitor", passed=False, error_message=str(e)))
            continue
        results.extend(
            VerdictResult(name=f"{label}/{v.name}", passed=v.passed, margin=v.worst_margin) for v in report.verdicts
        )

    return VerificationSummary(config_hash=config.config_hash, duration=time.time() - start, results=results)


def _timestamp() -> str:
    return datetime.now(UTC).isoformat()


def print_verification_summary(summary: VerificationSummary) -> None:
    """Log the counts and the per-check outcome of a verification run."""
    logger.info(f"\n{SEPARATOR_LONG}")
    logger.info("VERIFICATION SUMMARY")
    logger.info(SEPARATOR_LONG)
    logger.info(f"Config hash: {summary.config_hash}")
    logger.info(f"Duration: {summary.duration:.2f} seconds")
    logger.info(f"Total checks: {summary.total_checks}")
    logger.info(f"Passed: {summary.passed_count}")
    logger.info(f"Failed: {summary.failed_count}")
    logger.info(SEPARATOR_LONG)

    passed = [r for r in summary.results if r.passed]
    failed = [r for r in summary.results if not r.passed]
    if passed:
        logger.info("\n[OK] PASSED CHECKS:")
        for result in passed:
            logger.info(f"  [OK] {result.name}")
    if failed:
        logger.error("\n[FAIL] FAILED CHECKS:")
        for result in failed:
            logger.error(f"  [FAIL] {result.name}")
            if result.error_message:
                logger.error(f"    Error: {result.error_message}")
            elif result.margin is not None:
                logger.error(f"    Worst margin: {result.margin:.3e}")

    logger.info(f"\n{SEPARATOR_LONG}")


def build_verification_results_json(summary: VerificationSummary) -> dict[str, Any]:
    """Deterministic results dictionary; checks sorted by name, no timings.

    Structure:
        {
            "config_hash": str,
            "total_checks": int,
            "passed_count": int,
            "failed_count": int,
            "checks": [{"name": str, "status": "pass" | "fail", "margin": float | None, "error": str}]
        }
    """
    checks = [
        {
            "name": result.name,
            "status": "pass" if result.passed else "fail",
            "margin": result.margin,
            "error": result.error_message,
        }
        for result in summary.results
    ]
    checks.sort(key=lambda x: x["name"])
    return {
        "config_hash": summary.config_hash,
        "total_checks": summary.total_checks,
        "passed_count": summary.passed_count,
        "failed_count": summary.failed_count,
        "checks": checks,
    }


def save_verification_results(summary: VerificationSummary, output_dir: str | Path) -> Path:
    """Write verification-results.json and its metadata sidecar into output_dir."""
    directory = Path(output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    results_path = directory / VERIFICATION_RESULTS_FILENAME
    with open(results_path, "w", encoding="utf-8") as f:
        json.dump(build_verification_results_json(summary), f, indent=2)
    with open(directory / VERIFICATION_META_FILENAME, "w", encoding="utf-8") as f:
        json.dump(
            {"config_hash": summary.config_hash, "created": _timestamp(), "duration": summary.duration}, f, indent=2
        )
    logger.info(f"\n-> Verification results written to {results_path}")
    return results_path
