# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Periodic 3D grids, sampled fields and spectral operators.

Arrays are indexed ``values[ix, iy, iz]`` so numpy axis j is the physical
axis j. Snapshot files store the same arrays with x varying fastest.

All first-order spectral operators (gradient, divergence, Riesz transforms)
zero the Nyquist wavenumber, and every second-order operator is built from
the same wavenumbers, so div(grad f) is the spectral Laplacian exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import DomainMismatch, GridMismatch, NotSolenoidal, ValidationError
from .lab_config import DEFAULT_DEALIAS, HERMITIAN_TOLERANCE, MIN_GRID_POINTS, SOLENOIDAL_TOLERANCE
from .logger import get_logger

logger = get_logger(__name__)

SPATIAL_AXES = (-3, -2, -1)


class Domain(Enum):
    """Computational domain of a grid."""

    TORUS = "torus"
    WINDOWED = "windowed"


def _read_only(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Grid3:
    """Uniform periodic grid with n samples per axis on a box of side box_length.

    Attributes:
        n: Samples per axis, a power of two >= 8
        box_length: Side length L > 0
        domain: TORUS, or WINDOWED for the Gaussian-weighted stand-in for R^3
    """

    n: int
    box_length: float
    domain: Domain = Domain.TORUS

    def __post_init__(self) -> None:
        if self.n < MIN_GRID_POINTS or self.n & (self.n - 1):
            raise ValidationError(f"Grid size must be a power of two >= {MIN_GRID_POINTS}, got {self.n}")
        if not self.box_length > 0 or not np.isfinite(self.box_length):
            raise ValidationError(f"Box length must be positive and finite, got {self.box_length}")

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    @property
    def total_measure(self) -> float:
        return self.box_length**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def center(self) -> np.ndarray:
        return np.full(3, self.box_length / 2)

    @cached_property
    def axis(self) -> np.ndarray:
        """Sample coordinates i*dx along one axis."""
        return _read_only(np.arange(self.n) * self.dx)

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Coordinate arrays of shape (3, n, n, n)."""
        return _read_only(np.stack(np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")))

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        """Integer mode numbers along one axis in FFT order."""
        return _read_only(np.fft.fftfreq(self.n, d=1.0 / self.n))

    @cached_property
    def derivative_wavenumbers(self) -> np.ndarray:
        """Wavevector components (3, n, n, n) with the Nyquist mode zeroed."""
        k = 2 * np.pi / self.box_length * self.mode_numbers.copy()
        k[self.n // 2] = 0.0
        return _read_only(np.stack(np.meshgrid(k, k, k, indexing="ij")))

    @cached_property
    def k_squared(self) -> np.ndarray:
        return _read_only(np.sum(self.derivative_wavenumbers**2, axis=0))

    @cached_property
    def inverse_k_squared(self) -> np.ndarray:
        """1/|k|^2 with the value 0 wherever |k| = 0."""
        k2 = self.k_squared
        return _read_only(np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0))

    def dealias_mask(self, fraction: Fraction = DEFAULT_DEALIAS) -> np.ndarray:
        """Boolean mask keeping modes with |m_j| <= fraction * n/2 on every axis."""
        keep = np.abs(self.mode_numbers) <= float(fraction) * self.n / 2
        return np.logical_and.outer(np.logical_and.outer(keep, keep), keep)

    def to_json_dict(self) -> dict[str, object]:
        return {"n": self.n, "box_length": self.box_length, "domain": self.domain.value}


@dataclass(frozen=True)
class ScalarField:
    """Real samples on a grid; immutable after construction."""

    grid: Grid3
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != self.grid.shape:
            raise GridMismatch(f"Scalar field shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("Scalar field contains NaN or infinite values")
        object.__setattr__(self, "values", _read_only(values))

    @classmethod
    def zeros(cls, grid: Grid3) -> ScalarField:
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid3, value: float) -> ScalarField:
        return cls(grid, np.full(grid.shape, float(value)))

    def mean(self) -> float:
        return float(np.mean(self.values))

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def scaled(self, factor: float) -> ScalarField:
        return ScalarField(self.grid, factor * self.values)

    def with_values(self, values: np.ndarray) -> ScalarField:
        return ScalarField(self.grid, values)


@dataclass(frozen=True)
class VectorField:
    """Three real components on a shared grid, stored as one (3, n, n, n) array."""

    grid: Grid3
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.shape != (3, *self.grid.shape):
            raise GridMismatch(f"Vector field shape {data.shape} does not match grid {(3, *self.grid.shape)}")
        if not np.all(np.isfinite(data)):
            raise ValidationError("Vector field contains NaN or infinite values")
        object.__setattr__(self, "data", _read_only(data))

    @classmethod
    def zeros(cls, grid: Grid3) -> VectorField:
        return cls(grid, np.zeros((3, *grid.shape)))

    @classmethod
    def from_components(cls, *components: ScalarField) -> VectorField:
        if len(components) != 3:
            raise ValidationError(f"A vector field needs 3 components, got {len(components)}")
        _check_same_grid(*components)
        return cls(components[0].grid, np.stack([c.values for c in components]))

    @property
    def components(self) -> tuple[ScalarField, ScalarField, ScalarField]:
        return (
            ScalarField(self.grid, self.data[0]),
            ScalarField(self.grid, self.data[1]),
            ScalarField(self.grid, self.data[2]),
        )

    def magnitude_squared(self) -> np.ndarray:
        return np.sum(self.data**2, axis=0)

    def magnitude(self) -> ScalarField:
        return ScalarField(self.grid, np.sqrt(self.magnitude_squared()))

    def max_speed(self) -> float:
        return float(np.sqrt(np.max(self.magnitude_squared())))

    def scaled(self, factor: float) -> VectorField:
        return VectorField(self.grid, factor * self.data)


@dataclass(frozen=True)
class SpectralField:
    """Unnormalized discrete Fourier coefficients of a scalar field (numpy.fft convention)."""

    grid: Grid3
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        coefficients = np.array(self.coefficients, dtype=np.complex128, copy=True)
        if coefficients.shape != self.grid.shape:
            raise GridMismatch(f"Spectrum shape {coefficients.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coefficients", _read_only(coefficients))

    def hermitian_defect(self) -> float:
        """Relative max deviation from c(-k) = conj(c(k))."""
        c = self.coefficients
        mirrored = np.conj(np.roll(np.flip(c, axis=(0, 1, 2)), shift=1, axis=(0, 1, 2)))
        scale = max(float(np.max(np.abs(c))), np.finfo(float).tiny)
        return float(np.max(np.abs(c - mirrored))) / scale

    def is_hermitian(self, tolerance: float = HERMITIAN_TOLERANCE) -> bool:
        return self.hermitian_defect() <= tolerance


def _check_same_grid(*fields: ScalarField | VectorField | SpectralField) -> Grid3:
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise GridMismatch(f"Grid mismatch: {grid} vs {other.grid}")
    return grid


def _forward(array: np.ndarray) -> np.ndarray:
    return np.fft.fftn(array, axes=SPATIAL_AXES)


def _inverse(array: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(array, axes=SPATIAL_AXES).real


def transform_forward(f: ScalarField) -> SpectralField:
    """Return the discrete Fourier coefficients of f."""
    return SpectralField(f.grid, _forward(f.values))


def transform_inverse(spectrum: SpectralField) -> ScalarField:
    """Return the real field with the given coefficients (imaginary round-off discarded)."""
    return ScalarField(spectrum.grid, _inverse(spectrum.coefficients))


def gradient(f: ScalarField) -> VectorField:
    """Spectral gradient: multiply by i k_j."""
    f_hat = _forward(f.values)
    k = f.grid.derivative_wavenumbers
    return VectorField(f.grid, _inverse(1j * k * f_hat))


def divergence(v: VectorField) -> ScalarField:
    """Spectral divergence: sum_j i k_j v_j."""
    k = v.grid.derivative_wavenumbers
    v_hat = _forward(v.data)
    return ScalarField(v.grid, _inverse(np.sum(1j * k * v_hat, axis=0)))


def laplacian(f: ScalarField) -> ScalarField:
    """Spectral Laplacian: multiply by -|k|^2."""
    return ScalarField(f.grid, _inverse(-f.grid.k_squared * _forward(f.values)))


def velocity_gradient(v: VectorField) -> np.ndarray:
    """Return the tensor d_j v_i as an array of shape (3, 3, n, n, n) indexed [i, j]."""
    k = v.grid.derivative_wavenumbers
    v_hat = _forward(v.data)
    return _inverse(1j * k[np.newaxis, :, ...] * v_hat[:, np.newaxis, ...])


def leray_project_spectral(v_hat: np.ndarray, grid: Grid3) -> np.ndarray:
    """Remove the gradient part of a vector spectrum: v - k (k.v)/|k|^2."""
    k = grid.derivative_wavenumbers
    k_dot_v = np.sum(k * v_hat, axis=0)
    return v_hat - k * (k_dot_v * grid.inverse_k_squared)


def leray_project(v: VectorField) -> VectorField:
    """Orthogonal projection onto divergence-free fields."""
    return VectorField(v.grid, _inverse(leray_project_spectral(_forward(v.data), v.grid)))


def riesz_transform(axis: int, f: ScalarField) -> ScalarField:
    """Apply R_j with multiplier -i k_j/|k|; the zero mode maps to 0.

    Args:
        axis: Component index j in {0, 1, 2}
        f: Field to transform (its mean is discarded)
    """
    if axis not in (0, 1, 2):
        raise ValidationError(f"Riesz axis must be 0, 1 or 2, got {axis}")
    grid = f.grid
    inverse_norm = np.sqrt(grid.inverse_k_squared)
    multiplier = -1j * grid.derivative_wavenumbers[axis] * inverse_norm
    return ScalarField(grid, _inverse(multiplier * _forward(f.values)))


def divergence_max(v: VectorField) -> float:
    return divergence(v).max_abs()


def _product_spectra(v: VectorField) -> dict[tuple[int, int], np.ndarray]:
    """Spectra of v_i v_j for i <= j."""
    return {(i, j): _forward(v.data[i] * v.data[j]) for i in range(3) for j in range(i, 3)}


def _double_divergence_spectrum(v: VectorField) -> np.ndarray:
    """Spectrum of sum_ij d_i d_j (v_i v_j)."""
    k = v.grid.derivative_wavenumbers
    total = np.zeros(v.grid.shape, dtype=np.complex128)
    for (i, j), w_hat in _product_spectra(v).items():
        weight = 1.0 if i == j else 2.0
        total -= weight * k[i] * k[j] * w_hat
    return total


def require_solenoidal(v: VectorField, tolerance: float = SOLENOIDAL_TOLERANCE) -> None:
    """Raise NotSolenoidal if max |div v| exceeds the tolerance."""
    defect = divergence_max(v)
    if defect > tolerance:
        raise NotSolenoidal(f"Velocity divergence {defect:.3e} exceeds tolerance {tolerance:.1e}")


def pressure_from_velocity(v: VectorField, tolerance: float = SOLENOIDAL_TOLERANCE) -> ScalarField:
    """Solve -Laplace(pi) = sum_ij d_i d_j (v_i v_j) spectrally with zero-mean pi.

    Equivalently pi = sum_ij R_i R_j (v_i v_j).

    Raises:
        NotSolenoidal: If v is not divergence-free within tolerance
    """
    require_solenoidal(v, tolerance)
    rhs_hat = _double_divergence_spectrum(v)
    pi_hat = rhs_hat * v.grid.inverse_k_squared
    pi_hat[0, 0, 0] = 0.0
    return ScalarField(v.grid, _inverse(pi_hat))


def poisson_residual(v: VectorField, pi: ScalarField) -> float:
    """Relative max-norm of Laplace(pi) + sum_ij d_i d_j (v_i v_j)."""
    _check_same_grid(v, pi)
    rhs = _inverse(_double_divergence_spectrum(v))
    residual = laplacian(pi).values + rhs
    scale = max(float(np.max(np.abs(rhs))), np.finfo(float).tiny)
    return float(np.max(np.abs(residual))) / scale


def gauss_weight(grid: Grid3, torus_mode: bool = False) -> ScalarField:
    """Return exp(-|x - x_c|^2) on a windowed grid, or the constant 1 on the torus.

    Args:
        grid: Target grid
        torus_mode: Must be True to request the constant weight on a TORUS grid

    Raises:
        DomainMismatch: If called on a TORUS grid without torus_mode
    """
    if grid.domain is Domain.TORUS:
        if not torus_mode:
            raise DomainMismatch("The Gaussian weight is defined on windowed grids; pass torus_mode=True on the torus")
        return ScalarField.constant(grid, 1.0)
    return ScalarField(grid, gaussian_profile(grid))


def gaussian_profile(grid: Grid3) -> np.ndarray:
    """exp(-|x - x_c|^2) sampled on any grid, centred in the box."""
    offsets = grid.coordinates - grid.center[:, np.newaxis, np.newaxis, np.newaxis]
    return np.exp(-np.sum(offsets**2, axis=0))


def finite_difference_gradient(f: ScalarField) -> VectorField:
    """Second-order central-difference gradient on the periodic grid."""
    dx = f.grid.dx
    parts = [(np.roll(f.values, -1, axis=a) - np.roll(f.values, 1, axis=a)) / (2 * dx) for a in range(3)]
    return VectorField(f.grid, np.stack(parts))


def l2_norm(array: np.ndarray, grid: Grid3) -> float:
    """Discrete L^2 norm of a scalar array, or of the Euclidean norm of a stacked array."""
    squared = array**2 if array.shape == grid.shape else np.sum(array**2, axis=tuple(range(array.ndim - 3)))
    return float(np.sqrt(np.sum(squared) * grid.cell_volume))
