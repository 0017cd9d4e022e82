# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Calibrate the registry constants on a corpus of velocity fields.

The corpus is a set of seeded random solenoidal velocities plus, when given,
the snapshots of a simulated trajectory. For every sweep pair (theta, q) the
Hoelder, Riesz and interpolation-Sobolev ratios are measured with unit
constants; each registry constant is the corpus maximum times
(1 + CALIBRATION_MARGIN).
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .errors import ConstantField
from .fields import Grid3, VectorField, pressure_from_velocity
from .lab_config import CALIBRATION_MARGIN, CALIBRATION_SEEDS
from .logger import get_logger
from .lorentz import riesz_defect, sobolev_defect
from .monitor import MonitorConfig, holder_chain, interp_sobolev_bound, v_shift
from .registry import ConstantsRegistry
from .solver import random_solenoidal

logger = get_logger(__name__)

# Spectral slopes cycled through the random corpus
CORPUS_SLOPES = (-5.0 / 3.0, -3.0, -1.0)


@dataclass
class CalibrationSummary:
    """Corpus maxima before the margin is applied.

    Attributes:
        samples: Number of velocity fields examined
        holder: Largest Hoelder ratio
        riesz: Largest Riesz ratio
        sobolev: Largest Sobolev ratio
        interp_sobolev: Largest combined interpolation-Sobolev ratio
        sweep: (theta, q) pairs covered
    """

    samples: int = 0
    holder: float = 0.0
    riesz: float = 0.0
    sobolev: float = 0.0
    interp_sobolev: float = 0.0
    sweep: list[tuple[Fraction, Fraction]] = field(default_factory=list)


def corpus_velocities(grid: Grid3, seeds: int = CALIBRATION_SEEDS) -> list[VectorField]:
    """Seeded random solenoidal velocities with unit RMS speed."""
    return [
        random_solenoidal(grid, amplitude=1.0, seed=seed, spectrum_slope=CORPUS_SLOPES[seed % len(CORPUS_SLOPES)])
        for seed in range(seeds)
    ]


def _ratio(numerator: float, denominator: float) -> float | None:
    return None if denominator == 0 else numerator / denominator


def _inflate(maximum: float, fallback: float) -> float:
    return maximum * (1 + CALIBRATION_MARGIN) if maximum > 0 else fallback


def calibrate(
    velocities: Iterable[VectorField],
    sweep: Sequence[tuple[Fraction, Fraction]],
    torus_weight: bool = True,
    base: ConstantsRegistry | None = None,
) -> tuple[ConstantsRegistry, CalibrationSummary]:
    """Measure the chain ratios over the corpus and return calibrated constants.

    Args:
        velocities: Divergence-free velocity fields
        sweep: (theta, q) pairs whose exponents are exercised
        torus_weight: Weight choice passed to the monitor on torus grids
        base: Registry supplying the Gronwall constants, which are not calibrated

    Returns:
        Tuple of (calibrated registry, summary of raw maxima)
    """
    base = base or ConstantsRegistry()
    unit_configs = [MonitorConfig(theta=t, q=q, torus_weight=torus_weight) for t, q in sweep]
    summary = CalibrationSummary(sweep=list(sweep))

    for v in velocities:
        summary.samples += 1
        pi = pressure_from_velocity(v)
        shift = v_shift(v, torus_weight)
        shift_squared = shift.with_values(shift.values**2)
        for cfg in unit_configs:
            target = cfg.solution.shift_target
            chain = holder_chain(v, pi, cfg)
            holder = _ratio(chain.lhs, chain.holder_bound)
            if holder is not None:
                summary.holder = max(summary.holder, holder)
            if cfg.solution.uses_r1:
                riesz = _ratio(chain.pressure_norm, chain.riesz_bound)
                if riesz is not None:
                    summary.riesz = max(summary.riesz, riesz)
                for axis in range(3):
                    summary.riesz = max(summary.riesz, riesz_defect(v.components[axis], axis, target, 2))
            interpolation = interp_sobolev_bound(shift_squared, target, cfg.constants)
            ratio = _ratio(interpolation.lhs, interpolation.bound)
            if ratio is not None:
                summary.interp_sobolev = max(summary.interp_sobolev, ratio)
        try:
            summary.sobolev = max(summary.sobolev, sobolev_defect(shift_squared, 2))
        except ConstantField:
            logger.debug("-> Skipping constant V^2 in the Sobolev corpus")

    sobolev = _inflate(summary.sobolev, base.C_sobolev_corpus)
    registry = replace(
        base,
        C_holder_corpus=_inflate(summary.holder, base.C_holder_corpus),
        C_riesz_corpus=_inflate(summary.riesz, base.C_riesz_corpus),
        C_sobolev_corpus=sobolev,
        C_interp_corpus=_inflate(summary.interp_sobolev, base.interp_sobolev) / sobolev,
    )
    logger.info(
        f"-> Calibrated on {summary.samples} fields: holder {summary.holder:.6g}, riesz {summary.riesz:.6g}, "
        f"sobolev {summary.sobolev:.6g}, interp-sobolev {summary.interp_sobolev:.6g}"
    )
    return registry, summary
