# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Pseudo-spectral Navier-Stokes integrator on the periodic box.

Velocities advance in Fourier space with a fourth-order Runge-Kutta scheme
whose viscous part is integrated exactly by the factor exp(-nu |k|^2 h).
The nonlinearity is evaluated in divergence form with 2/3-rule truncation
and projected onto divergence-free fields. Pressure is recomputed from the
velocity at every emitted state.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from .errors import GridMismatch, StabilityViolation, ValidationError
from .fields import (
    Grid3,
    ScalarField,
    VectorField,
    leray_project_spectral,
    pressure_from_velocity,
    require_solenoidal,
    velocity_gradient,
)
from .lab_config import DEFAULT_DEALIAS, SEPARATOR_SHORT
from .logger import get_logger
from .snapshots import (
    SnapshotEntry,
    TrajectoryManifest,
    read_manifest,
    read_snapshot,
    snapshot_filename,
    write_manifest,
    write_snapshot,
)

logger = get_logger(__name__)


class InitialConditionKind(Enum):
    TAYLOR_GREEN = "taylor_green"
    SHEAR = "shear"
    RANDOM_SOLENOIDAL = "random_solenoidal"
    FROM_FILE = "from_file"


@dataclass(frozen=True)
class InitialCondition:
    """Recipe for the initial velocity.

    Attributes:
        kind: Which family of initial data to build
        amplitude: Peak speed (Taylor-Green, shear) or RMS speed (random)
        mode: Wavenumber index m of the shear sin(2 pi m y / L)
        seed: Random generator seed
        spectrum_slope: Exponent s of the target energy spectrum E(k) ~ k^s
        path: Velocity snapshot to start from
    """

    kind: InitialConditionKind
    amplitude: float = 1.0
    mode: int = 1
    seed: int = 0
    spectrum_slope: float = -5.0 / 3.0
    path: Path | None = None

    def __post_init__(self) -> None:
        if self.kind is InitialConditionKind.FROM_FILE and self.path is None:
            raise ValidationError("A from_file initial condition needs a snapshot path")
        if self.mode < 1:
            raise ValidationError(f"Shear mode must be >= 1, got {self.mode}")
        if not math.isfinite(self.amplitude):
            raise ValidationError(f"Amplitude must be finite, got {self.amplitude}")


@dataclass(frozen=True)
class SolverConfig:
    """Numerical parameters of one simulation.

    Attributes:
        grid: Computational grid
        t_end: Final time
        initial_condition: Initial velocity recipe
        dt: Time step, or None to pick one from the CFL bound of the initial data
        t_start: Time attached to the initial state
        dealias: Fraction of the half-spectrum kept by the truncation rule
        cfl_safety: Safety factor in (0, 1] for the automatic time step
        snapshot_every: Steps between emitted states
        viscosity: Kinematic viscosity (1 in the nondimensional equations)
        stability_factor: Multiplier of dx^2/nu in the viscous bound
    """

    grid: Grid3
    t_end: float
    initial_condition: InitialCondition
    dt: float | None = None
    t_start: float = 0.0
    dealias: Fraction = DEFAULT_DEALIAS
    cfl_safety: float = 0.5
    snapshot_every: int = 1
    viscosity: float = 1.0
    stability_factor: float = 1.0

    def __post_init__(self) -> None:
        if not self.t_end > self.t_start:
            raise ValidationError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if self.dt is not None and not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if not 0 < self.cfl_safety <= 1:
            raise ValidationError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.snapshot_every < 1:
            raise ValidationError(f"snapshot_every must be >= 1, got {self.snapshot_every}")
        if not 0 < self.dealias <= 1:
            raise ValidationError(f"dealias must lie in (0, 1], got {self.dealias}")
        if not self.viscosity > 0:
            raise ValidationError(f"viscosity must be positive, got {self.viscosity}")
        if not self.stability_factor > 0:
            raise ValidationError(f"stability_factor must be positive, got {self.stability_factor}")


@dataclass(frozen=True)
class FlowState:
    """Velocity and pressure at one instant."""

    t: float
    v: VectorField
    pi: ScalarField = field(repr=False)
    # nu * integral of ||grad v||^2 from the start of the run, summed over solver steps
    dissipated: float | None = None

    @classmethod
    def from_velocity(cls, t: float, v: VectorField, dissipated: float | None = None) -> FlowState:
        return cls(t, v, pressure_from_velocity(v), dissipated)

    @property
    def grid(self) -> Grid3:
        return self.v.grid


def taylor_green(grid: Grid3, amplitude: float = 1.0) -> VectorField:
    """A (sin x cos y cos z, -cos x sin y cos z, 0) with x scaled by 2 pi / L."""
    x, y, z = grid.coordinates * (2 * np.pi / grid.box_length)
    return VectorField(
        grid,
        amplitude * np.stack([np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), np.zeros_like(x)]),
    )


def shear(grid: Grid3, amplitude: float = 1.0, mode: int = 1) -> VectorField:
    """A (sin(2 pi m y / L), 0, 0); an exact solution decaying like exp(-nu k^2 t)."""
    y = grid.coordinates[1] * (2 * np.pi * mode / grid.box_length)
    zeros = np.zeros_like(y)
    return VectorField(grid, np.stack([amplitude * np.sin(y), zeros, zeros]))


def random_solenoidal(
    grid: Grid3,
    amplitude: float = 1.0,
    seed: int = 0,
    spectrum_slope: float = -5.0 / 3.0,
    dealias: Fraction = DEFAULT_DEALIAS,
) -> VectorField:
    """Seeded Gaussian velocity with energy spectrum ~ k^slope, band-limited and projected.

    The result has zero mean, no Nyquist content and RMS speed equal to amplitude.
    """
    rng = np.random.default_rng(seed)
    noise_hat = np.fft.fftn(rng.standard_normal((3, *grid.shape)), axes=(-3, -2, -1))
    k_norm = np.sqrt(grid.k_squared)
    # Shell energy ~ k^2 |u_k|^2, so modal amplitude ~ k^{(slope - 2)/2}
    shaping = np.power(k_norm, (spectrum_slope - 2.0) / 2.0, out=np.zeros_like(k_norm), where=k_norm > 0)
    shaping *= grid.dealias_mask(dealias)
    v_hat = leray_project_spectral(noise_hat * shaping, grid)
    velocity = np.fft.ifftn(v_hat, axes=(-3, -2, -1)).real
    rms = math.sqrt(float(np.mean(np.sum(velocity**2, axis=0))))
    if rms == 0:
        raise ValidationError("Random initial data is empty; the grid leaves no resolved modes")
    return VectorField(grid, velocity * (amplitude / rms))


def build_initial_velocity(
    grid: Grid3, condition: InitialCondition, dealias: Fraction = DEFAULT_DEALIAS
) -> VectorField:
    """Materialize an InitialCondition on the grid.

    Raises:
        GridMismatch: If a from_file snapshot lives on another grid
        NotSolenoidal: If a from_file snapshot is not divergence-free
    """
    if condition.kind is InitialConditionKind.TAYLOR_GREEN:
        return taylor_green(grid, condition.amplitude)
    if condition.kind is InitialConditionKind.SHEAR:
        return shear(grid, condition.amplitude, condition.mode)
    if condition.kind is InitialConditionKind.RANDOM_SOLENOIDAL:
        return random_solenoidal(grid, condition.amplitude, condition.seed, condition.spectrum_slope, dealias)

    loaded = read_snapshot(condition.path)  # type: ignore[arg-type]
    if not isinstance(loaded, VectorField):
        raise ValidationError(f"{condition.path} holds a scalar field, expected a velocity")
    if loaded.grid != grid:
        raise GridMismatch(f"{condition.path} is on {loaded.grid}, configured grid is {grid}")
    require_solenoidal(loaded)
    return loaded


def _nonlinear_tendency(v_hat: np.ndarray, grid: Grid3, mask: np.ndarray) -> np.ndarray:
    """Spectrum of -P(d_j (v_i v_j)) with truncated input and output."""
    k = grid.derivative_wavenumbers
    v = np.fft.ifftn(v_hat * mask, axes=(-3, -2, -1)).real
    tendency = np.zeros_like(v_hat)
    for i in range(3):
        for j in range(i, 3):
            w_hat = np.fft.fftn(v[i] * v[j]) * mask
            tendency[i] -= 1j * k[j] * w_hat
            if i != j:
                tendency[j] -= 1j * k[i] * w_hat
    return leray_project_spectral(tendency, grid)


def nonlinear_term(v: VectorField, dealias: Fraction = DEFAULT_DEALIAS) -> VectorField:
    """Dealiased projected nonlinearity P(v . grad v).

    Raises:
        NotSolenoidal: If v is not divergence-free
    """
    require_solenoidal(v)
    v_hat = np.fft.fftn(v.data, axes=(-3, -2, -1))
    tendency = _nonlinear_tendency(v_hat, v.grid, v.grid.dealias_mask(dealias))
    return VectorField(v.grid, -np.fft.ifftn(tendency, axes=(-3, -2, -1)).real)


def stability_bounds(
    v: VectorField, viscosity: float = 1.0, stability_factor: float = 1.0
) -> tuple[float, float]:
    """Return the (advective, viscous) time-step bounds dx/max|v| and stability_factor dx^2/nu."""
    dx = v.grid.dx
    speed = v.max_speed()
    advective = dx / speed if speed > 0 else math.inf
    return advective, stability_factor * dx**2 / viscosity


def cfl_dt(
    v: VectorField, grid: Grid3, safety: float, viscosity: float = 1.0, stability_factor: float = 1.0
) -> float:
    """safety * min(dx/max|v|, stability_factor dx^2/nu); zero velocity leaves the viscous bound only."""
    if not 0 < safety <= 1:
        raise ValidationError(f"CFL safety must lie in (0, 1], got {safety}")
    if v.grid != grid:
        raise GridMismatch(f"Velocity grid {v.grid} differs from {grid}")
    return safety * min(stability_bounds(v, viscosity, stability_factor))


def step(
    state: FlowState,
    dt: float,
    viscosity: float = 1.0,
    dealias: Fraction = DEFAULT_DEALIAS,
    stability_factor: float = 1.0,
) -> FlowState:
    """Advance one integrating-factor RK4 step.

    Raises:
        StabilityViolation: If dt exceeds the advective or viscous bound
    """
    advective, viscous = stability_bounds(state.v, viscosity, stability_factor)
    if dt > min(advective, viscous):
        raise StabilityViolation(
            f"dt = {dt:.3e} exceeds the stability bound (advective {advective:.3e}, viscous {viscous:.3e})"
        )
    grid = state.grid
    mask = grid.dealias_mask(dealias)
    half = np.exp(-viscosity * grid.k_squared * dt / 2)
    full = half * half

    u = np.fft.fftn(state.v.data, axes=(-3, -2, -1))
    a = _nonlinear_tendency(u, grid, mask)
    b = _nonlinear_tendency(half * (u + dt / 2 * a), grid, mask)
    c = _nonlinear_tendency(half * u + dt / 2 * b, grid, mask)
    d = _nonlinear_tendency(full * u + dt * half * c, grid, mask)
    u_next = full * u + dt / 6 * (full * a + 2 * half * (b + c) + d)

    v_next = VectorField(grid, np.fft.ifftn(u_next, axes=(-3, -2, -1)).real)
    return FlowState.from_velocity(state.t + dt, v_next)


def plan_steps(config: SolverConfig, v0: VectorField) -> tuple[int, float]:
    """Return (number of steps, step size) covering [t_start, t_end] exactly.

    The step count is a multiple of snapshot_every so every emitted state is
    equally spaced and the last one sits at t_end.
    """
    span = config.t_end - config.t_start
    target = config.dt
    if target is None:
        target = cfl_dt(v0, config.grid, config.cfl_safety, config.viscosity, config.stability_factor)
    chunks = math.ceil(span / (target * config.snapshot_every) - 1e-9)
    n_steps = max(chunks, 1) * config.snapshot_every
    return n_steps, span / n_steps


def _accumulated(rates: Sequence[float], dt: float) -> float:
    """Simpson sum of the per-step dissipation rates, trapezoid for a single step."""
    if len(rates) >= 3:
        return float(cumulative_simpson(np.asarray(rates), dx=dt, initial=0.0)[-1])
    return float(cumulative_trapezoid(np.asarray(rates), dx=dt, initial=0.0)[-1])


def simulate(
    config: SolverConfig, output_dir: str | Path | None = None, config_hash: str = ""
) -> list[FlowState]:
    """Integrate from t_start to t_end and return the emitted states.

    When output_dir is given every emitted velocity is written as a snapshot
    and a manifest indexing them is written alongside.
    """
    v0 = build_initial_velocity(config.grid, config.initial_condition, config.dealias)
    n_steps, dt = plan_steps(config, v0)

    logger.info(f"\n{SEPARATOR_SHORT}")
    logger.info(f"Simulating {config.initial_condition.kind.value} on {config.grid.n}^3 ({config.grid.domain.value})")
    logger.info(SEPARATOR_SHORT)
    logger.info(f"-> t = {config.t_start:g} .. {config.t_end:g}, {n_steps} steps of dt = {dt:.6g}")

    state = FlowState.from_velocity(config.t_start, v0, dissipated=0.0)
    states = [state]
    rates = [config.viscosity * enstrophy_dissipation(v0)]
    for index in range(1, n_steps + 1):
        state = step(state, dt, config.viscosity, config.dealias, config.stability_factor)
        rates.append(config.viscosity * enstrophy_dissipation(state.v))
        if index % config.snapshot_every == 0:
            # Emitted times sit exactly on the uniform cadence
            dissipated = _accumulated(rates, dt)
            state = FlowState(config.t_start + index * dt, state.v, state.pi, dissipated)
            states.append(state)
            logger.debug(f"   t = {state.t:.6g}, energy = {kinetic_energy(state.v):.10g}")

    logger.info(f"-> Emitted {len(states)} states; final energy {kinetic_energy(states[-1].v):.10g}")
    if output_dir is not None:
        persist_trajectory(states, output_dir, config_hash, config.viscosity)
    return states


def persist_trajectory(
    states: Sequence[FlowState], output_dir: str | Path, config_hash: str, viscosity: float = 1.0
) -> Path:
    """Write one velocity snapshot per state plus the manifest; return the manifest path."""
    directory = Path(output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for index, state in enumerate(states):
        name = snapshot_filename(index)
        write_snapshot(directory / name, state.v)
        entries.append(SnapshotEntry(index, state.t, name, state.dissipated))
    manifest = TrajectoryManifest(config_hash, states[0].grid, viscosity, entries)
    return write_manifest(manifest, directory)


def load_trajectory(
    manifest_path: str | Path, expected_hash: str | None = None
) -> tuple[TrajectoryManifest, list[FlowState]]:
    """Read every snapshot listed in a manifest and recompute pressures.

    Raises:
        HashMismatch: If expected_hash is given and differs from the manifest's hash
        FormatError: If a snapshot is malformed or not a velocity on the manifest grid
    """
    manifest = read_manifest(manifest_path, expected_hash)
    base = Path(manifest_path).parent
    states = []
    for entry in manifest.entries:
        velocity = read_snapshot(base / entry.path)
        if not isinstance(velocity, VectorField) or velocity.grid != manifest.grid:
            raise GridMismatch(f"{entry.path} is not a velocity on the manifest grid {manifest.grid}")
        states.append(FlowState.from_velocity(entry.t, velocity, entry.dissipated))
    logger.info(f"-> Loaded {len(states)} states from {manifest_path}")
    return manifest, states


def kinetic_energy(v: VectorField) -> float:
    """(1/2) integral of |v|^2."""
    return 0.5 * float(np.sum(v.magnitude_squared())) * v.grid.cell_volume


def enstrophy_dissipation(v: VectorField) -> float:
    """Integral of |grad v|^2."""
    return float(np.sum(velocity_gradient(v) ** 2)) * v.grid.cell_volume


def mean_velocity(v: VectorField) -> np.ndarray:
    return np.mean(v.data, axis=(1, 2, 3))


@dataclass(frozen=True)
class EnergyBudget:
    """Energy balance along a trajectory.

    Attributes:
        times: Emission times
        energy: (1/2)||v(t)||^2
        dissipated: nu * integral_0^t ||grad v||^2 ds
        initial_energy: (1/2)||v_0||^2
    """

    times: np.ndarray
    energy: np.ndarray
    dissipated: np.ndarray
    initial_energy: float

    @property
    def totals(self) -> np.ndarray:
        return self.energy + self.dissipated

    def worst_relative_excess(self) -> float:
        """max_t (E(t) + D(t) - E_0) / E_0; 0 for the zero flow."""
        if self.initial_energy == 0:
            return 0.0
        return float(np.max(self.totals - self.initial_energy)) / self.initial_energy

    def holds(self, tolerance: float = 1e-6) -> bool:
        return self.worst_relative_excess() <= tolerance


def energy_budget(states: Sequence[FlowState], viscosity: float = 1.0) -> EnergyBudget:
    """Evaluate the unforced energy inequality.

    The dissipation recorded by the solver at every step is used when each state
    carries it; otherwise the rate is integrated with Simpson quadrature over the
    snapshots, whose error grows with the snapshot spacing.
    """
    if not states:
        raise ValidationError("Energy budget needs at least one state")
    times = np.array([s.t for s in states])
    energy = np.array([kinetic_energy(s.v) for s in states])
    if all(s.dissipated is not None for s in states):
        recorded = np.array([s.dissipated for s in states], dtype=float)
        return EnergyBudget(times, energy, recorded - recorded[0], float(energy[0]))
    rate = viscosity * np.array([enstrophy_dissipation(s.v) for s in states])
    if len(states) >= 3:
        dissipated = cumulative_simpson(rate, x=times, initial=0.0)
    elif len(states) == 2:
        dissipated = cumulative_trapezoid(rate, x=times, initial=0.0)
    else:
        dissipated = np.zeros(1)
    return EnergyBudget(times, energy, dissipated, float(energy[0]))

