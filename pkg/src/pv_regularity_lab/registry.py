# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Constants registry: a text file of ``name = value`` lines.

Lines starting with ``#`` are comments. The calibration run writes the
configuration hash as a comment header.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import FormatError
from .logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ConstantsRegistry:
    """Constants used by the inequality verdicts.

    Attributes:
        C_holder_corpus: Hoelder step constant
        C_sobolev_corpus: Sobolev constant for p = 2
        C_riesz_corpus: Bound of the pressure map |v|^2 -> pi in the chain norms
        C_interp_corpus: Interpolation constant; the interpolation-Sobolev bound uses
            C_interp_corpus * C_sobolev_corpus
        c_gronwall: Exponential rate constant of the Gronwall envelope
        mu_gronwall: Scale parameter of the Gronwall envelope
    """

    C_holder_corpus: float = 1.0
    C_sobolev_corpus: float = 1.0
    C_riesz_corpus: float = 1.0
    C_interp_corpus: float = 1.0
    c_gronwall: float = 1.0
    mu_gronwall: float = 1.0

    def __post_init__(self) -> None:
        for item in fields(self):
            value = getattr(self, item.name)
            if not (math.isfinite(value) and value > 0):
                raise FormatError(f"Registry constant {item.name} must be positive and finite, got {value}")

    @property
    def interp_sobolev(self) -> float:
        return self.C_interp_corpus * self.C_sobolev_corpus

    def to_json_dict(self) -> dict[str, float]:
        return asdict(self)


REGISTRY_NAMES = frozenset(item.name for item in fields(ConstantsRegistry))


def format_registry(registry: ConstantsRegistry, config_hash: str | None = None) -> str:
    lines = []
    if config_hash:
        lines.append(f"# config_hash = {config_hash}")
    lines.extend(f"{name} = {value!r}" for name, value in registry.to_json_dict().items())
    return "\n".join(lines) + "\n"


def parse_registry(text: str) -> ConstantsRegistry:
    """Parse registry text; names not given keep their default of 1.

    Raises:
        FormatError: On malformed lines, unknown or repeated names, or non-numeric values
    """
    values: dict[str, float] = {}
    for line_number, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, separator, value = (part.strip() for part in line.partition("="))
        if not separator:
            raise FormatError(f"line {line_number}: expected 'name = value', got '{raw}'")
        if name not in REGISTRY_NAMES:
            raise FormatError(f"line {line_number}: unknown registry constant '{name}'")
        if name in values:
            raise FormatError(f"line {line_number}: constant '{name}' given twice")
        try:
            values[name] = float(value)
        except ValueError as e:
            raise FormatError(f"line {line_number}: '{value}' is not a number") from e
    return ConstantsRegistry(**values)


def registry_config_hash(text: str) -> str | None:
    """Return the hash recorded in a ``# config_hash = ...`` header, if any."""
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("#"):
            name, separator, value = (part.strip() for part in line.lstrip("#").partition("="))
            if separator and name == "config_hash":
                return value
    return None


def read_registry(path: str | Path) -> ConstantsRegistry:
    """Load a registry file.

    Raises:
        FileNotFoundError: If the file does not exist
        FormatError: If the file is malformed
    """
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"Constants registry not found: {source}")
    registry = parse_registry(source.read_text(encoding="utf-8"))
    logger.debug(f"-> Loaded constants registry from {source}")
    return registry


def read_registry_or_default(path: str | Path | None) -> ConstantsRegistry:
    if path is None or not Path(path).exists():
        logger.warning(f"-> No constants registry at {path}; using unit constants")
        return ConstantsRegistry()
    return read_registry(path)


def write_registry(registry: ConstantsRegistry, path: str | Path, config_hash: str | None = None) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(format_registry(registry, config_hash), encoding="utf-8")
    logger.info(f"-> Constants registry written to {target}")
    return target
