# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Pytest configuration and fixtures for pv-regularity-lab tests."""

import math
from pathlib import Path

import numpy as np
import pytest

from pv_regularity_lab.fields import Domain, Grid3, ScalarField, VectorField
from pv_regularity_lab.lorentz import distribution
from pv_regularity_lab.solver import random_solenoidal, shear, taylor_green


def band_limited_scalar(grid: Grid3, seed: int, max_mode: int = 3) -> ScalarField:
    """Mean-zero random trigonometric polynomial with modes |m_i| <= max_mode and no Nyquist content."""
    rng = np.random.default_rng(seed)
    spectrum = np.zeros(grid.shape, dtype=np.complex128)
    m = grid.mode_numbers
    keep = (np.abs(m[0]) <= max_mode) & (np.abs(m[1]) <= max_mode) & (np.abs(m[2]) <= max_mode)
    spectrum[keep] = rng.standard_normal(int(keep.sum())) + 1j * rng.standard_normal(int(keep.sum()))
    spectrum[0, 0, 0] = 0.0
    values = np.fft.ifftn(spectrum).real
    return ScalarField(grid, values / np.max(np.abs(values)))


def lorentz_norm_quadrature(f: ScalarField, p: float, q: float, points: int = 1_000_001) -> float:
    """Trapezoid rule of p * int_0^inf tau^q lambda(tau)^{q/p} dtau/tau over [0, max |f|]."""
    profile = distribution(f)
    if profile.is_zero:
        return 0.0
    tau = np.linspace(0.0, float(profile.levels[-1]), points)
    # lambda(tau) on the whole grid at once; equals profile.measure_above(tau) pointwise
    index = np.searchsorted(np.asarray(profile.levels), tau, side="right")
    measures = np.concatenate([[profile.support_measure], np.asarray(profile.tail_measure)])
    lam = measures[index]
    # q >= 1, so 0 ** (q - 1) is well defined (1 when q = 1)
    integrand = tau ** (q - 1) * lam ** (q / p)
    return (p * float(np.trapezoid(integrand, tau))) ** (1.0 / q)


@pytest.fixture
def torus_grid() -> Grid3:
    """16^3 torus of side 2 pi."""
    return Grid3(16, 2 * math.pi)


@pytest.fixture
def small_grid() -> Grid3:
    """8^3 unit torus (cell volume 1/512)."""
    return Grid3(8, 1.0)


@pytest.fixture
def windowed_grid() -> Grid3:
    """16^3 windowed box of side 10."""
    return Grid3(16, 10.0, Domain.WINDOWED)


@pytest.fixture
def tg_velocity(torus_grid: Grid3) -> VectorField:
    """Unit-amplitude Taylor-Green velocity on the 16^3 torus."""
    return taylor_green(torus_grid)


@pytest.fixture
def shear_velocity(torus_grid: Grid3) -> VectorField:
    """Shear flow (sin y, 0, 0) on the 16^3 torus."""
    return shear(torus_grid, amplitude=1.0, mode=1)


@pytest.fixture
def random_velocity(torus_grid: Grid3) -> VectorField:
    """Seeded random solenoidal velocity with unit RMS speed."""
    return random_solenoidal(torus_grid, amplitude=1.0, seed=7)


@pytest.fixture
def random_scalar(torus_grid: Grid3) -> ScalarField:
    """Seeded mean-zero band-limited scalar."""
    return band_limited_scalar(torus_grid, seed=11)


@pytest.fixture
def run_config_text(tmp_path: Path) -> str:
    """Small but complete run configuration in the line format."""
    return f"""
# Taylor-Green verification run
solver.n = 16
solver.box_length = 2pi
solver.t_end = 0.2
solver.dt = 0.01
solver.snapshot_every = 5
solver.initial_condition = taylor_green
solver.amplitude = 1.0

monitor.theta = 1/2
monitor.q = 4
monitor.sweep = 0:2, 1:4

run.output_dir = {tmp_path / "run"}
"""
