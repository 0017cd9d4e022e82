# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""
P-V Regularity Lab - numerical laboratory for the mixed pressure-velocity regularity criterion

The library simulates incompressible Navier-Stokes flows on a periodic box and checks,
snapshot by snapshot, the inequalities that lead from a bound on pi/(weight + |v|)^theta
in weak Lorentz spaces to regularity.

Key Features:
- Exact rational exponent algebra for the criterion line and the estimate chain
- Pseudo-spectral fields, Leray projection, Riesz transforms and pressure recovery
- Exact Lorentz and weak-L^p norms from step distribution functions
- Pseudo-spectral Navier-Stokes integrator with snapshot trajectories
- Term-by-term monitor of the quartic energy ledger and the estimate chain
- Continue-on-failure verification with deterministic reports

Main Components:
- conjugate_split: Exponents of the chain for (theta, q)
- lorentz_norm / weak_norm: Quasi-norms of sampled fields
- simulate: Integrate a SolverConfig and write its trajectory
- run_monitor: Evaluate every verdict along a trajectory
- verify: Full pipeline from a RunConfig
"""

__version__ = "0.1.0"

from .calibration import calibrate, corpus_velocities
from .config import RunConfig, load_run_config, parse_config, parse_yaml_config
from .errors import FormatError, ParseError, PVLabError, ValidationError
from .exponents import (
    INFINITY,
    CriterionKind,
    ExponentSolution,
    classify,
    conjugate_split,
    criterion_line,
    mixed_pv_line,
    solve_p,
)
from .fields import Domain, Grid3, ScalarField, VectorField, leray_project, pressure_from_velocity
from .logger import get_logger, setup_logger
from .lorentz import distribution, lebesgue_norm, lorentz_norm, weak_norm
from .monitor import MonitorConfig, MonitorReport, run_monitor, write_report
from .registry import ConstantsRegistry, read_registry, write_registry
from .snapshots import read_snapshot, write_snapshot
from .solver import FlowState, InitialCondition, InitialConditionKind, SolverConfig, load_trajectory, simulate
from .verification import VerdictResult, VerificationSummary, save_verification_results, verify

__all__ = [
    # Version
    "__version__",
    # Exponent algebra
    "INFINITY",
    "CriterionKind",
    "ExponentSolution",
    "classify",
    "conjugate_split",
    "criterion_line",
    "mixed_pv_line",
    "solve_p",
    # Fields
    "Domain",
    "Grid3",
    "ScalarField",
    "VectorField",
    "leray_project",
    "pressure_from_velocity",
    # Norms
    "distribution",
    "lebesgue_norm",
    "lorentz_norm",
    "weak_norm",
    # Solver
    "FlowState",
    "InitialCondition",
    "InitialConditionKind",
    "SolverConfig",
    "load_trajectory",
    "simulate",
    # Monitor
    "MonitorConfig",
    "MonitorReport",
    "run_monitor",
    "write_report",
    # Constants
    "ConstantsRegistry",
    "calibrate",
    "corpus_velocities",
    "read_registry",
    "write_registry",
    # IO and configuration
    "RunConfig",
    "load_run_config",
    "parse_config",
    "parse_yaml_config",
    "read_snapshot",
    "write_snapshot",
    # Verification
    "VerdictResult",
    "VerificationSummary",
    "save_verification_results",
    "verify",
    # Errors
    "FormatError",
    "PVLabError",
    "ParseError",
    "ValidationError",
    # Logging
    "get_logger",
    "setup_logger",
]
