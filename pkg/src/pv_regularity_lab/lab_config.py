# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Configuration constants for the P-V regularity laboratory."""

from fractions import Fraction

PACKAGE_LOGGER_PREFIX = "pv_regularity_lab"

# Console output separators
SEPARATOR_LONG = "=" * 70
SEPARATOR_SHORT = "=" * 60

# File names
REPORT_FILENAME = "report.json"
REPORT_META_FILENAME = "report.meta.json"
LEDGER_CSV_FILENAME = "ledger.csv"
MANIFEST_FILENAME = "trajectory.json"
REGISTRY_FILENAME = "constants.txt"
VERIFICATION_RESULTS_FILENAME = "verification-results.json"
VERIFICATION_META_FILENAME = "verification-results.meta.json"
SNAPSHOT_PATTERN = "snap_{index:05d}.pvrl"

# Snapshot format
SNAPSHOT_MAGIC = b"PVRL"
SNAPSHOT_VERSION = 1
DOMAIN_TAGS = {"torus": 0, "windowed": 1}

# Exit codes
EXIT_SUCCESS = 0
EXIT_VERDICT_FAILURE = 1
EXIT_USAGE_ERROR = 2
EXIT_IO_ERROR = 3

# Environment variable names
ENV_PVLAB_THREADS = "PVLAB_THREADS"
ENV_PVLAB_DEBUG = "PVLAB_DEBUG"

# Grid defaults
MIN_GRID_POINTS = 8
DEFAULT_WINDOW_LENGTH = 10.0
DEFAULT_DEALIAS = Fraction(2, 3)

# Field-core tolerances
SOLENOIDAL_TOLERANCE = 1e-8
HERMITIAN_TOLERANCE = 1e-12

# Monitor defaults
DEFAULT_EPSILON = Fraction(1, 64)
DEFAULT_LEDGER_C_TOL = 1.0
ABSORPTION_LIMIT = Fraction(1, 2)

# Calibration
CALIBRATION_MARGIN = 0.05
CALIBRATION_SEEDS = 16
NESTING_TOLERANCE = 1e-10

# Acceptance sweep of the estimate chain, as (theta, q) pairs
DEFAULT_CHAIN_SWEEP = ((Fraction(0), Fraction(2)), (Fraction(1, 2), Fraction(4)), (Fraction(1), Fraction(4)))
