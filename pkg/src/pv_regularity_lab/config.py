# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Run configuration: strict ``section.key = value`` text or an equivalent YAML document."""

from __future__ import annotations

import hashlib
import math
from collections.abc import Callable
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml

from .errors import ParseError
from .exponents import as_rational
from .fields import Domain, Grid3
from .lab_config import DEFAULT_CHAIN_SWEEP, DEFAULT_WINDOW_LENGTH, REGISTRY_FILENAME
from .logger import get_logger
from .monitor import MonitorConfig
from .solver import InitialCondition, InitialConditionKind, SolverConfig

logger = get_logger(__name__)

YAML_SUFFIXES = {".yml", ".yaml"}
LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
TRAJECTORY_SUBDIR = "trajectory"
MONITOR_SUBDIR = "monitor"

# key -> required
CONFIG_KEYS: dict[str, bool] = {
    "solver.n": True,
    "solver.box_length": False,
    "solver.domain": False,
    "solver.dt": False,
    "solver.t_end": True,
    "solver.t_start": False,
    "solver.dealias": False,
    "solver.cfl_safety": False,
    "solver.snapshot_every": False,
    "solver.viscosity": False,
    "solver.stability_factor": False,
    "solver.initial_condition": True,
    "solver.amplitude": False,
    "solver.mode": False,
    "solver.seed": False,
    "solver.spectrum_slope": False,
    "solver.path": False,
    "monitor.theta": True,
    "monitor.q": True,
    "monitor.p": False,
    "monitor.epsilon": False,
    "monitor.torus_weight": False,
    "monitor.c_tol": False,
    "monitor.gronwall_q": False,
    "monitor.sweep": False,
    "run.output_dir": True,
    "run.registry_path": False,
    "run.log_level": False,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration of a full laboratory run.

    Attributes:
        solver: Simulation parameters
        monitor: Monitor parameters (constants default to 1 until a registry is loaded)
        output_dir: Directory receiving every artifact
        registry_path: Constants registry file
        log_level: Package log level
        sweep: (theta, q) pairs exercised by calibrate and verify
        config_hash: SHA-256 of the canonical key listing
    """

    solver: SolverConfig
    monitor: MonitorConfig
    output_dir: Path
    registry_path: Path
    log_level: str
    sweep: tuple[tuple[Fraction, Fraction], ...]
    config_hash: str

    @property
    def trajectory_dir(self) -> Path:
        return self.output_dir / TRAJECTORY_SUBDIR

    @property
    def monitor_dir(self) -> Path:
        return self.output_dir / MONITOR_SUBDIR

    @property
    def chain_pairs(self) -> list[tuple[Fraction, Fraction]]:
        """The configured (theta, q) followed by the sweep, without repeats."""
        pairs = [(self.monitor.theta, self.monitor.q)]
        pairs.extend(pair for pair in self.sweep if pair not in pairs)
        return pairs


def config_hash(entries: dict[str, str]) -> str:
    canonical = "".join(f"{key} = {entries[key]}\n" for key in sorted(entries))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class _Entries:
    """Raw string entries with their source line numbers."""

    def __init__(self, values: dict[str, str], lines: dict[str, int]):
        self.values = values
        self.lines = lines

    def has(self, key: str) -> bool:
        return key in self.values

    def get(self, key: str, convert: Callable[[str], Any], default: Any = None) -> Any:
        if key not in self.values:
            return default
        raw = self.values[key]
        try:
            return convert(raw)
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError(f"{key}: cannot read '{raw}' ({e})", self.lines.get(key)) from e


def _rational(raw: str) -> Fraction:
    return as_rational(raw)


def _real(raw: str) -> float:
    """Finite float; a trailing 'pi' multiplies by pi (e.g. 2pi, 0.5pi, pi)."""
    text = raw.strip().lower()
    if text.endswith("pi"):
        prefix = text[:-2].strip().rstrip("*").strip()
        value = (float(prefix) if prefix else 1.0) * math.pi
    else:
        value = float(text)
    if not math.isfinite(value):
        raise ValueError("value must be finite")
    return value


def _integer(raw: str) -> int:
    return int(raw.strip())


def _boolean(raw: str) -> bool:
    text = raw.strip().lower()
    if text in {"true", "yes", "1"}:
        return True
    if text in {"false", "no", "0"}:
        return False
    raise ValueError("expected true or false")


def _sweep(raw: str) -> tuple[tuple[Fraction, Fraction], ...]:
    pairs = []
    for item in raw.split(","):
        theta, separator, q = item.strip().partition(":")
        if not separator:
            raise ValueError(f"sweep entries look like theta:q, got '{item.strip()}'")
        pairs.append((as_rational(theta), as_rational(q)))
    return tuple(pairs)


def _build(entries: _Entries) -> RunConfig:
    for key, required in CONFIG_KEYS.items():
        if required and not entries.has(key):
            raise ParseError(f"missing required key '{key}'")

    domain = entries.get("solver.domain", lambda raw: Domain(raw.strip().lower()), Domain.TORUS)
    default_length = 2 * math.pi if domain is Domain.TORUS else DEFAULT_WINDOW_LENGTH
    grid = Grid3(entries.get("solver.n", _integer), entries.get("solver.box_length", _real, default_length), domain)

    dt = entries.get("solver.dt", lambda raw: None if raw.strip().lower() == "auto" else _real(raw))
    path = entries.get("solver.path", lambda raw: Path(raw.strip()))
    initial = InitialCondition(
        kind=entries.get("solver.initial_condition", lambda raw: InitialConditionKind(raw.strip().lower())),
        amplitude=entries.get("solver.amplitude", _real, 1.0),
        mode=entries.get("solver.mode", _integer, 1),
        seed=entries.get("solver.seed", _integer, 0),
        spectrum_slope=entries.get("solver.spectrum_slope", _real, -5.0 / 3.0),
        path=path,
    )
    solver_kwargs: dict[str, Any] = {
        "t_start": entries.get("solver.t_start", _real, 0.0),
        "cfl_safety": entries.get("solver.cfl_safety", _real, 0.5),
        "snapshot_every": entries.get("solver.snapshot_every", _integer, 1),
        "viscosity": entries.get("solver.viscosity", _real, 1.0),
        "stability_factor": entries.get("solver.stability_factor", _real, 1.0),
    }
    if entries.has("solver.dealias"):
        solver_kwargs["dealias"] = entries.get("solver.dealias", _rational)
    solver = SolverConfig(
        grid=grid, t_end=entries.get("solver.t_end", _real), initial_condition=initial, dt=dt, **solver_kwargs
    )

    monitor_kwargs: dict[str, Any] = {
        "theta": entries.get("monitor.theta", _rational),
        "q": entries.get("monitor.q", _rational),
        "p": entries.get("monitor.p", _rational),
        "torus_weight": entries.get("monitor.torus_weight", _boolean, True),
    }
    for key, convert in (("epsilon", _rational), ("c_tol", _real), ("gronwall_q", _rational)):
        if entries.has(f"monitor.{key}"):
            monitor_kwargs[key] = entries.get(f"monitor.{key}", convert)
    monitor = MonitorConfig(**monitor_kwargs)
    monitor.check_absorption(grid.domain)

    output_dir = entries.get("run.output_dir", lambda raw: Path(raw.strip()))
    log_level = entries.get("run.log_level", lambda raw: raw.strip().upper(), "INFO")
    if log_level not in LOG_LEVELS:
        raise ParseError(f"run.log_level must be one of {sorted(LOG_LEVELS)}", entries.lines.get("run.log_level"))

    return RunConfig(
        solver=solver,
        monitor=monitor,
        output_dir=output_dir,
        registry_path=entries.get("run.registry_path", lambda raw: Path(raw.strip()), output_dir / REGISTRY_FILENAME),
        log_level=log_level,
        sweep=entries.get("monitor.sweep", _sweep, DEFAULT_CHAIN_SWEEP),
        config_hash=config_hash(entries.values),
    )


def parse_config(text: str) -> RunConfig:
    """Parse the line format: one ``section.key = value`` per line, ``#`` comments.

    Raises:
        ParseError: On malformed lines, unknown or repeated keys, missing required keys
            or unreadable values (with the line number)
        ValidationError: If a value violates a documented invariant

    Examples:
        >>> cfg = parse_config(text)  # text containing "monitor.theta = 1/2"
        >>> cfg.monitor.theta
        Fraction(1, 2)
    """
    values: dict[str, str] = {}
    lines: dict[str, int] = {}
    for line_number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, separator, value = (part.strip() for part in line.partition("="))
        if not separator or not value:
            raise ParseError(f"expected 'section.key = value', got '{raw.strip()}'", line_number)
        if key not in CONFIG_KEYS:
            raise ParseError(f"unknown key '{key}'", line_number)
        if key in values:
            raise ParseError(f"key '{key}' given twice (first on line {lines[key]})", line_number)
        values[key] = value
        lines[key] = line_number
    return _build(_Entries(values, lines))


def _flatten(document: dict[str, Any], prefix: str = "") -> dict[str, str]:
    flat: dict[str, str] = {}
    for key, value in document.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        elif isinstance(value, bool):
            flat[name] = "true" if value else "false"
        elif isinstance(value, list):
            flat[name] = ", ".join(str(item) for item in value)
        else:
            flat[name] = str(value)
    return flat


def parse_yaml_config(text: str) -> RunConfig:
    """Parse a YAML document with ``solver``, ``monitor`` and ``run`` mappings.

    Raises:
        ParseError: If the YAML is invalid or has unknown or missing keys
    """
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as e:
        line = getattr(getattr(e, "problem_mark", None), "line", None)
        raise ParseError(f"invalid YAML: {e}", None if line is None else line + 1) from e
    if not isinstance(document, dict):
        raise ParseError("the YAML document must be a mapping of sections")
    values = _flatten(document)
    for key in values:
        if key not in CONFIG_KEYS:
            raise ParseError(f"unknown key '{key}'")
    return _build(_Entries(values, {}))


def load_run_config(path: str | Path) -> RunConfig:
    """Load a run configuration, choosing the YAML parser by file suffix.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ParseError: If the file cannot be parsed
    """
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"Configuration file not found: {source}")
    text = source.read_text(encoding="utf-8")
    config = parse_yaml_config(text) if source.suffix.lower() in YAML_SUFFIXES else parse_config(text)
    logger.debug(f"-> Loaded configuration {source} (hash {config.config_hash[:12]})")
    return config
