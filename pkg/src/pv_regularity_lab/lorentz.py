# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Lebesgue, Lorentz and weak-L^p quasi-norms of sampled fields.

A sampled field has a step distribution function, so every quasi-norm is
evaluated in closed form from the plateaus of that step function. Values are
normalized by the field maximum before powers are taken and the scale is
restored at the end.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import ConstantField, ExponentOutOfRange, ExponentRelationViolated
from .exponents import INFINITY, ExtendedRational, PositiveInfinity, as_rational, parse_extended, reciprocal
from .fields import Domain, ScalarField, VectorField, gradient, pressure_from_velocity, riesz_transform
from .logger import get_logger

logger = get_logger(__name__)

ExponentLike = Fraction | int | str


class NormMethod(Enum):
    """How a Lorentz quasi-norm value was obtained."""

    CLOSED_FORM_SUM = "ClosedFormSum"
    SUP_FORMULA = "SupFormula"


@dataclass(frozen=True)
class DistributionProfile:
    """Step distribution function of |f|.

    Attributes:
        levels: Distinct positive values of |f|, strictly increasing
        tail_measure: tail_measure[i] = measure{|f| > levels[i]}; strictly decreasing, last entry 0
        support_measure: measure{|f| > 0}
        total_measure: Measure of the whole domain
    """

    levels: np.ndarray
    tail_measure: np.ndarray
    support_measure: float
    total_measure: float

    @property
    def is_zero(self) -> bool:
        return self.levels.size == 0

    def measure_above(self, tau: float) -> float:
        """Evaluate lambda(tau) = measure{|f| > tau} for tau >= 0."""
        if tau < 0:
            return self.total_measure
        index = int(np.searchsorted(self.levels, tau, side="right"))
        if index == 0:
            return self.support_measure
        return float(self.tail_measure[index - 1])


@dataclass(frozen=True)
class LorentzNormResult:
    p: Fraction
    q: ExtendedRational
    value: float
    method: NormMethod


def distribution(f: ScalarField) -> DistributionProfile:
    """Return the exact step distribution of |f|; equal values share one plateau.

    Examples:
        A field equal to 1 on a quarter of the cells and 2 elsewhere has
        levels [1, 2] and tail measures [3/4 * total, 0].
    """
    magnitudes = np.abs(f.values).ravel()
    positive = magnitudes[magnitudes > 0]
    levels, counts = np.unique(positive, return_counts=True)
    # Integer cell counts keep every tail an exact multiple of the cell volume
    tail_counts = positive.size - np.cumsum(counts)
    cell_volume = f.grid.cell_volume
    return DistributionProfile(
        levels=levels,
        tail_measure=tail_counts * cell_volume,
        support_measure=positive.size * cell_volume,
        total_measure=f.grid.total_measure,
    )


def _finite_exponent(value: ExponentLike, name: str, lower: Fraction = Fraction(1)) -> Fraction:
    exponent = as_rational(value)
    if exponent < lower:
        raise ExponentOutOfRange(f"{name} must be >= {lower}, got {exponent}")
    return exponent


def lorentz_norm(f: ScalarField, p: ExponentLike, q: ExponentLike) -> LorentzNormResult:
    """Closed-form L^{p,q} quasi-norm for finite p and q.

    On each plateau [a, b) where the distribution equals m the contribution to
    the q-th power is p m^{q/p} (b^q - a^q) / q.

    Raises:
        ExponentOutOfRange: Unless 1 <= p and 1 <= q, both finite
    """
    if isinstance(q, PositiveInfinity) or isinstance(p, PositiveInfinity):
        raise ExponentOutOfRange("lorentz_norm needs finite p and q; use weak_norm for q = inf")
    p = _finite_exponent(p, "p")
    q = _finite_exponent(q, "q")
    profile = distribution(f)
    if profile.is_zero:
        return LorentzNormResult(p, q, 0.0, NormMethod.CLOSED_FORM_SUM)

    scale = float(profile.levels[-1])
    upper = profile.levels / scale
    lower = np.concatenate(([0.0], upper[:-1]))
    plateau = np.concatenate(([profile.support_measure], profile.tail_measure[:-1]))
    pf, qf = float(p), float(q)
    contributions = pf * plateau ** (qf / pf) * (upper**qf - lower**qf) / qf
    value = scale * float(np.sum(contributions)) ** (1.0 / qf)
    return LorentzNormResult(p, q, value, NormMethod.CLOSED_FORM_SUM)


def weak_norm(f: ScalarField, p: ExponentLike) -> LorentzNormResult:
    """Weak L^p quasi-norm sup_tau tau * lambda(tau)^{1/p}.

    Evaluated as the maximum of u_(i) (i * cell_volume)^{1/p} over the values
    of |f| sorted in decreasing order.
    """
    p = _finite_exponent(p, "p")
    magnitudes = np.sort(np.abs(f.values).ravel())[::-1]
    if magnitudes[0] == 0:
        return LorentzNormResult(p, INFINITY, 0.0, NormMethod.SUP_FORMULA)
    ranks = np.arange(1, magnitudes.size + 1) * f.grid.cell_volume
    value = float(np.max(magnitudes * ranks ** (1.0 / float(p))))
    return LorentzNormResult(p, INFINITY, value, NormMethod.SUP_FORMULA)


def lebesgue_norm(f: ScalarField, p: ExponentLike | PositiveInfinity) -> float:
    """(sum |f|^p * cell_volume)^{1/p}; the maximum of |f| when p is infinite."""
    magnitudes = np.abs(f.values)
    scale = float(np.max(magnitudes))
    if isinstance(parse_extended(p), PositiveInfinity) or scale == 0:
        return scale
    pf = float(_finite_exponent(p, "p"))
    return scale * float(np.sum((magnitudes / scale) ** pf) * f.grid.cell_volume) ** (1.0 / pf)


def lorentz_quasi_norm(f: ScalarField, p: ExponentLike, q: ExponentLike | PositiveInfinity) -> float:
    """Dispatch to lorentz_norm for finite q and to weak_norm for q = inf."""
    if isinstance(parse_extended(q), PositiveInfinity):
        return weak_norm(f, p).value
    return lorentz_norm(f, p, q).value


def nesting_constant(p: ExponentLike, q1: ExponentLike, q2: ExponentLike | PositiveInfinity) -> float:
    """Return (q1/p)^{1/q1 - 1/q2}."""
    p_r = _finite_exponent(p, "p")
    q1_r = _finite_exponent(q1, "q1")
    q2_r = parse_extended(q2)
    if not q1_r < q2_r:
        raise ExponentOutOfRange(f"Nesting needs q1 < q2, got {q1_r} and {q2_r}")
    return float(q1_r / p_r) ** float(1 / q1_r - reciprocal(q2_r))


def nesting_defect(
    f: ScalarField, p: ExponentLike, q1: ExponentLike, q2: ExponentLike | PositiveInfinity
) -> float:
    """Ratio ||f||_{p,q2} / ((q1/p)^{1/q1 - 1/q2} ||f||_{p,q1}); at most 1 for every f.

    Returns 0 for the zero field.
    """
    constant = nesting_constant(p, q1, q2)
    small = lorentz_quasi_norm(f, p, q1)
    if small == 0:
        return 0.0
    return lorentz_quasi_norm(f, p, q2) / (constant * small)


def _check_holder_relation(
    total: ExtendedRational, first: ExtendedRational, second: ExtendedRational, label: str
) -> None:
    if reciprocal(total) != reciprocal(first) + reciprocal(second):
        raise ExponentRelationViolated(f"1/{label} = 1/{label}1 + 1/{label}2 fails for {total}, {first}, {second}")


def holder_defect(
    f: ScalarField,
    g: ScalarField,
    r: ExponentLike,
    s: ExponentLike | PositiveInfinity,
    r1: ExponentLike,
    s1: ExponentLike | PositiveInfinity,
    r2: ExponentLike,
    s2: ExponentLike | PositiveInfinity,
) -> float:
    """Ratio ||fg||_{r,s} / (||f||_{r1,s1} ||g||_{r2,s2}).

    Raises:
        ExponentRelationViolated: Unless 1/r = 1/r1 + 1/r2 and 1/s = 1/s1 + 1/s2 exactly
    """
    exponents = [parse_extended(x) for x in (r, s, r1, s1, r2, s2)]
    _check_holder_relation(exponents[0], exponents[2], exponents[4], "r")
    _check_holder_relation(exponents[1], exponents[3], exponents[5], "s")
    product = f.with_values(f.values * g.values)
    numerator = lorentz_quasi_norm(product, r, s)
    if numerator == 0:
        return 0.0
    return numerator / (lorentz_quasi_norm(f, r1, s1) * lorentz_quasi_norm(g, r2, s2))


def sobolev_exponent(p: ExponentLike, dimension: int = 3) -> Fraction:
    """Return the Sobolev target n p / (n - p)."""
    p = _finite_exponent(p, "p")
    if p >= dimension:
        raise ExponentOutOfRange(f"Sobolev embedding needs p < {dimension}, got {p}")
    return dimension * p / (dimension - p)


def sobolev_defect(f: ScalarField, p: ExponentLike) -> float:
    """Ratio ||f||_{L^{3p/(3-p),p}} / ||grad f||_{L^p}, mean-subtracted on the torus.

    Raises:
        ConstantField: If the gradient vanishes
    """
    target = sobolev_exponent(p)
    grad_norm = lebesgue_norm(gradient(f).magnitude(), p)
    if grad_norm <= np.finfo(float).eps * max(f.max_abs(), 1.0):
        raise ConstantField("Sobolev ratio is undefined for a field with zero gradient")
    centred = f.with_values(f.values - f.mean()) if f.grid.domain is Domain.TORUS else f
    return lorentz_norm(centred, target, p).value / grad_norm


def riesz_defect(f: ScalarField, axis: int, p: ExponentLike, q: ExponentLike | PositiveInfinity) -> float:
    """Ratio ||R_j f||_{p,q} / ||f||_{p,q}; 0 for the zero field."""
    denominator = lorentz_quasi_norm(f, p, q)
    if denominator == 0:
        return 0.0
    return lorentz_quasi_norm(riesz_transform(axis, f), p, q) / denominator


def pressure_riesz_defect(v: VectorField, p: ExponentLike, q: ExponentLike | PositiveInfinity) -> float:
    """Ratio ||pi||_{p,q} / || |v|^2 ||_{p,q} with pi from the pressure Poisson equation."""
    speed_squared = ScalarField(v.grid, v.magnitude_squared())
    denominator = lorentz_quasi_norm(speed_squared, p, q)
    if denominator == 0:
        return 0.0
    return lorentz_quasi_norm(pressure_from_velocity(v), p, q) / denominator
