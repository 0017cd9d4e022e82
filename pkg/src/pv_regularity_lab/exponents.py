# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Exact exponent algebra for the regularity criteria.

Every exponent (p, q, theta, beta, r1, r2, delta1, delta2, gamma, mu) is a
``fractions.Fraction``. Floating point never enters this module, so the
identities of the estimate chain are checked with zero tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import total_ordering
from typing import Any

from .errors import (
    DegenerateLine,
    ExponentInfeasible,
    ExponentRelationViolated,
    GammaOutOfRange,
    QOutOfRange,
    ThetaOutOfRange,
    ValidationError,
)

ZERO = Fraction(0)
ONE = Fraction(1)
TWO = Fraction(2)


@total_ordering
class PositiveInfinity:
    """The exponent value +infinity, greater than every rational."""

    _instance: PositiveInfinity | None = None

    def __new__(cls) -> PositiveInfinity:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PositiveInfinity)

    def __lt__(self, other: object) -> bool:
        if isinstance(other, PositiveInfinity | Fraction | int):
            return False
        return NotImplemented

    def __gt__(self, other: object) -> bool:
        if isinstance(other, PositiveInfinity):
            return False
        if isinstance(other, Fraction | int):
            return True
        return NotImplemented

    def __hash__(self) -> int:
        return hash("PositiveInfinity")

    def __repr__(self) -> str:
        return "INFINITY"

    def __str__(self) -> str:
        return "inf"


INFINITY = PositiveInfinity()

ExtendedRational = Fraction | PositiveInfinity


def as_rational(value: Fraction | int | str) -> Fraction:
    """Convert an integer, fraction or decimal/"a/b" string to an exact Fraction.

    Raises:
        ValidationError: If the value is a float or cannot be parsed exactly
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise ValidationError(f"Exponent {value!r} must be given exactly (int, Fraction or string), not as a float")
    if isinstance(value, Fraction | int):
        return Fraction(value)
    try:
        return Fraction(value.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValidationError(f"Cannot read '{value}' as an exact rational") from e


def parse_extended(value: Fraction | int | str | PositiveInfinity) -> ExtendedRational:
    """Like as_rational, but accepts "inf" / "∞" / INFINITY."""
    if isinstance(value, PositiveInfinity):
        return value
    if isinstance(value, str) and value.strip().lower() in {"inf", "infinity", "∞"}:
        return INFINITY
    return as_rational(value)


def reciprocal(value: ExtendedRational) -> Fraction:
    """Return 1/value with 1/infinity = 0.

    Raises:
        ValidationError: If value is zero
    """
    if isinstance(value, PositiveInfinity):
        return ZERO
    if value == 0:
        raise ValidationError("Division by zero in exponent algebra")
    return 1 / value


def format_rational(value: ExtendedRational | None) -> str | None:
    """Render an exponent as a "num/den" string ("inf" for infinity)."""
    if value is None:
        return None
    if isinstance(value, PositiveInfinity):
        return "inf"
    return f"{value.numerator}/{value.denominator}"


class CriterionKind(Enum):
    """Families of regularity criteria with a linear scaling condition."""

    MIXED_PV = "MixedPV"
    LPS = "LPS"
    ZHOU = "Zhou"
    BERSELLI_GALDI = "BerselliGaldi"
    BERSELLI_99 = "Berselli99"
    FRAC_98 = "Frac98"
    SOHR = "Sohr"
    SUZUKI = "Suzuki"


THETA_RANGES: dict[CriterionKind, tuple[Fraction, Fraction]] = {
    CriterionKind.MIXED_PV: (ZERO, ONE),
    CriterionKind.FRAC_98: (ZERO, ONE),
    CriterionKind.ZHOU: (ONE, Fraction(5, 3)),
}


class Classification(Enum):
    """Position of an exponent pair relative to a criterion line."""

    STRONG = "Strong"
    MILD = "Mild"
    INVALID = "Invalid"


@dataclass(frozen=True)
class CriterionLine:
    """A scaling condition a_p/p + a_q/q = rhs.

    Attributes:
        kind: Criterion family
        dimension: Space dimension n >= 3
        theta: Mixing exponent for the families that use it
    """

    kind: CriterionKind
    dimension: int = 3
    theta: Fraction | None = None

    def __post_init__(self) -> None:
        if self.dimension < 3:
            raise ValidationError(f"Dimension must be at least 3, got {self.dimension}")
        if self.kind in THETA_RANGES:
            if self.theta is None:
                raise ValidationError(f"{self.kind.value} requires theta")
            low, high = THETA_RANGES[self.kind]
            if not low <= self.theta <= high:
                raise ThetaOutOfRange(f"{self.kind.value} requires {low} <= theta <= {high}, got theta = {self.theta}")

    @property
    def coefficients(self) -> tuple[Fraction, Fraction]:
        """Return (a_p, a_q) of the left-hand side a_p/p + a_q/q."""
        n = Fraction(self.dimension)
        if self.kind is CriterionKind.BERSELLI_99:
            # 2/p + n/q = 1 + n/p, moved to the left
            return TWO - n, n
        return TWO, n

    @property
    def rhs(self) -> Fraction:
        """Right-hand side of the scaling condition."""
        theta = self.theta if self.theta is not None else ZERO
        match self.kind:
            case CriterionKind.MIXED_PV | CriterionKind.FRAC_98:
                return TWO - theta
            case CriterionKind.ZHOU:
                return Fraction(5, 2) - Fraction(3, 2) * theta
            case CriterionKind.BERSELLI_GALDI | CriterionKind.SUZUKI:
                return TWO
            case _:
                return ONE

    def scaling_sum(self, p: ExtendedRational, q: ExtendedRational) -> Fraction:
        """Evaluate a_p/p + a_q/q exactly."""
        a_p, a_q = self.coefficients
        return a_p * reciprocal(p) + a_q * reciprocal(q)

    def q_threshold(self) -> Fraction:
        """Return the lower bound on q for the line (strict unless noted by the kind)."""
        n = Fraction(self.dimension)
        match self.kind:
            case CriterionKind.MIXED_PV | CriterionKind.FRAC_98:
                return n / self.rhs
            case CriterionKind.ZHOU:
                return Fraction(6) / (5 - 3 * self.theta) if self.theta != Fraction(5, 3) else ZERO
            case CriterionKind.BERSELLI_GALDI:
                return n / 2
            case CriterionKind.SUZUKI:
                return Fraction(5, 2)
            case _:
                return n if self.kind is not CriterionKind.BERSELLI_99 else ZERO


def criterion_line(
    kind: CriterionKind | str, dimension: int = 3, theta: Fraction | int | str | None = None
) -> CriterionLine:
    """Build a CriterionLine from loosely typed inputs (kind name, decimal theta)."""
    resolved = kind if isinstance(kind, CriterionKind) else CriterionKind(kind)
    return CriterionLine(resolved, dimension, None if theta is None else as_rational(theta))


def mixed_pv_line(theta: Fraction | int | str, dimension: int = 3) -> CriterionLine:
    """Return the mixed pressure-velocity line 2/p + n/q = 2 - theta."""
    return criterion_line(CriterionKind.MIXED_PV, dimension, theta)


def beta_of_theta(theta: Fraction | int | str) -> Fraction:
    """Return beta = 2/(2 - theta).

    Args:
        theta: Mixing exponent in [0, 1]

    Returns:
        beta in [1, 2]; 2 + theta*beta = 2*beta holds exactly

    Raises:
        ThetaOutOfRange: If theta is not in [0, 1]

    Examples:
        >>> beta_of_theta(Fraction(1, 2))
        Fraction(4, 3)
    """
    theta = as_rational(theta)
    if not ZERO <= theta <= ONE:
        raise ThetaOutOfRange(f"theta must satisfy 0 <= theta <= 1 for the estimate chain, got {theta}")
    beta = TWO / (TWO - theta)
    assert TWO + theta * beta == TWO * beta
    return beta


def solve_p(line: CriterionLine, q: ExtendedRational | int | str) -> ExtendedRational:
    """Return the unique time exponent p on the line for a given q.

    Args:
        line: Criterion line
        q: Space exponent (INFINITY allowed for the kinds that admit it)

    Returns:
        p, possibly INFINITY (LPS endpoint q = n)

    Raises:
        DegenerateLine: If the line's right-hand side vanishes
        QOutOfRange: If q is not admissible for the kind

    Examples:
        >>> solve_p(mixed_pv_line(1), Fraction(4))
        Fraction(8, 1)
    """
    q = parse_extended(q)
    if line.rhs == 0:
        raise DegenerateLine(
            f"{line.kind.value} line has zero right-hand side at theta = {line.theta}; "
            "the condition degenerates to a bound in L^infinity"
        )

    threshold = line.q_threshold()
    kind = line.kind
    finite_only = kind in {CriterionKind.MIXED_PV, CriterionKind.FRAC_98, CriterionKind.SOHR, CriterionKind.SUZUKI}
    if isinstance(q, PositiveInfinity) and finite_only:
        raise QOutOfRange(f"{kind.value} requires a finite q")
    if not isinstance(q, PositiveInfinity) and q <= 0:
        raise QOutOfRange(f"q must be positive, got {q}")

    if kind is CriterionKind.LPS:
        if q < threshold:
            raise QOutOfRange(f"LPS requires q >= n = {threshold}, got {q}")
    elif kind is not CriterionKind.BERSELLI_99 and q <= threshold:
        raise QOutOfRange(f"{kind.value} requires q > {threshold}, got {q}")

    a_p, a_q = line.coefficients
    inverse_p = (line.rhs - a_q * reciprocal(q)) / a_p
    if inverse_p == 0 and kind is CriterionKind.LPS:
        return INFINITY
    if inverse_p <= 0:
        raise QOutOfRange(f"q = {q} forces a non-positive 1/p = {inverse_p} on the {kind.value} line")

    p = 1 / inverse_p
    assert line.scaling_sum(p, q) == line.rhs
    return p


@dataclass(frozen=True)
class ExponentSolution:
    """One admissible point of the mixed P-V line with every auxiliary exponent.

    Attributes:
        theta: Mixing exponent in [0, 1]
        beta: 2/(2 - theta)
        p: Time exponent on the line 2/p + 3/q = 2 - theta
        q: Space (weak Lorentz) exponent
        r1: Hoelder exponent of the pressure factor; None when beta = 2 (the leg is vacuous)
        r2: Hoelder exponent of the shift factor
        delta1: Interpolation parameter of the r1 leg
        delta2: Interpolation parameter of the r2 leg
    """

    theta: Fraction
    beta: Fraction
    p: Fraction
    q: Fraction
    r1: Fraction | None
    r2: Fraction
    delta1: Fraction
    delta2: Fraction

    @property
    def uses_r1(self) -> bool:
        return self.r1 is not None

    @property
    def inverse_r1(self) -> Fraction:
        return ZERO if self.r1 is None else 1 / self.r1

    @property
    def delta_mix(self) -> Fraction:
        """delta1 (2 - beta) + delta2 beta."""
        return self.delta1 * (TWO - self.beta) + self.delta2 * self.beta

    @property
    def pressure_target(self) -> Fraction | None:
        """Lorentz exponent (2 - beta) r1 of the pressure leg."""
        return None if self.r1 is None else (TWO - self.beta) * self.r1

    @property
    def shift_target(self) -> Fraction:
        """Lorentz exponent beta r2 of the shift leg."""
        return self.beta * self.r2

    def to_json_dict(self) -> dict[str, Any]:
        """Serialize every exponent as a "num/den" string."""
        return {
            "theta": format_rational(self.theta),
            "beta": format_rational(self.beta),
            "p": format_rational(self.p),
            "q": format_rational(self.q),
            "r1": format_rational(self.r1),
            "r1_used": self.uses_r1,
            "r2": format_rational(self.r2),
            "delta1": format_rational(self.delta1),
            "delta2": format_rational(self.delta2),
            "pressure_target": format_rational(self.pressure_target),
            "shift_target": format_rational(self.shift_target),
            "absorption_exponent": format_rational(absorption_exponent(self)),
        }


def mixed_pv_q_threshold(theta: Fraction) -> Fraction:
    """Return 3/(2 - theta), the lower bound for q on the mixed line in three dimensions."""
    return Fraction(3) / (TWO - theta)


def conjugate_split(theta: Fraction | int | str, q: Fraction | int | str) -> ExponentSolution:
    """Choose r1, r2, delta1, delta2 for the Hoelder/interpolation chain.

    Uses 1/r1 = (2-beta)/2 (1 - beta/q), 1/r2 = beta/2 (1 - beta/q) and
    delta1 = delta2 = 3 beta/(2q).

    Raises:
        ThetaOutOfRange: If theta is not in [0, 1]
        QOutOfRange: If q <= 3/(2 - theta)

    Examples:
        >>> conjugate_split(0, 3).delta1
        Fraction(1, 2)
    """
    theta = as_rational(theta)
    beta = beta_of_theta(theta)
    q = as_rational(q)
    threshold = mixed_pv_q_threshold(theta)
    if q <= threshold:
        raise QOutOfRange(f"q must exceed 3/(2-theta) = {threshold}, got {q}")

    slack = ONE - beta / q
    inverse_r1 = (TWO - beta) / 2 * slack
    inverse_r2 = beta / 2 * slack
    delta = 3 * beta / (2 * q)

    solution = ExponentSolution(
        theta=theta,
        beta=beta,
        p=Fraction(solve_p(mixed_pv_line(theta), q)),  # finite on the mixed line
        q=q,
        r1=None if inverse_r1 == 0 else 1 / inverse_r1,
        r2=1 / inverse_r2,
        delta1=delta,
        delta2=delta,
    )
    check_solution(solution)
    return solution


def check_solution(sol: ExponentSolution) -> None:
    """Assert the exact relations binding an ExponentSolution.

    Raises:
        ExponentRelationViolated: If any relation fails
    """
    if sol.beta != TWO / (TWO - sol.theta):
        raise ExponentRelationViolated(f"beta = {sol.beta} is not 2/(2-theta)")
    if not ONE <= sol.beta <= TWO:
        raise ExponentRelationViolated(f"beta = {sol.beta} outside [1, 2]")
    if sol.beta / sol.q + sol.inverse_r1 + 1 / sol.r2 != ONE:
        raise ExponentRelationViolated("beta/q + 1/r1 + 1/r2 != 1")
    if sol.r1 is None and sol.beta != TWO:
        raise ExponentRelationViolated("r1 may only be unused when beta = 2")
    if sol.r1 is not None and 1 / sol.pressure_target != interpolation_inverse(sol.delta1):
        raise ExponentRelationViolated("1/((2-beta) r1) != (1-delta1)/2 + delta1/6")
    if 1 / sol.shift_target != interpolation_inverse(sol.delta2):
        raise ExponentRelationViolated("1/(beta r2) != (1-delta2)/2 + delta2/6")
    if not (ZERO < sol.delta1 < ONE and ZERO < sol.delta2 < ONE):
        raise ExponentRelationViolated(f"deltas must lie in (0, 1), got {sol.delta1}, {sol.delta2}")


def interpolation_inverse(delta: Fraction) -> Fraction:
    """Return (1 - delta)/2 + delta/6, the inverse exponent interpolated between L^2 and L^6."""
    return (ONE - delta) / 2 + delta / 6


def interpolation_delta(target: Fraction) -> Fraction:
    """Return delta with 1/target = (1 - delta)/2 + delta/6.

    Raises:
        ExponentInfeasible: If target is not in (2, 6)
    """
    target = as_rational(target)
    if not Fraction(2) < target < Fraction(6):
        raise ExponentInfeasible(f"Interpolation target must lie in (2, 6), got {target}")
    return 3 * (Fraction(1, 2) - 1 / target)


def closing_identity(sol: ExponentSolution) -> Fraction:
    """Evaluate 2 (2 - delta1 (2-beta) - delta2 beta)/(2 beta) + 3/q.

    The result must equal 2 - theta, and delta1 (2-beta) + delta2 beta must equal 3 beta/q.

    Raises:
        ExponentRelationViolated: If either identity fails
    """
    check_solution(sol)
    if sol.delta_mix != 3 * sol.beta / sol.q:
        raise ExponentRelationViolated(f"delta1(2-beta) + delta2 beta = {sol.delta_mix} != 3 beta/q")
    value = 2 * (TWO - sol.delta_mix) / (2 * sol.beta) + 3 / sol.q
    if value != TWO - sol.theta:
        raise ExponentRelationViolated(f"closing identity gives {value}, expected {TWO - sol.theta}")
    return value


def absorption_exponent(sol: ExponentSolution) -> Fraction:
    """Return the time exponent 2 beta / (2 - delta1 (2-beta) - delta2 beta) left after Young absorption."""
    return 2 * sol.beta / (TWO - sol.delta_mix)


def young_exponents(sol: ExponentSolution) -> tuple[Fraction, Fraction]:
    """Return the conjugate pair (s, s') used to split the gradient factor.

    s = 2/a applies to the gradient factor and s' = 2/(2-a) to the rest, a = delta1 (2-beta) + delta2 beta.
    """
    a = sol.delta_mix
    return TWO / a, TWO / (TWO - a)


def gamma_one(n: int, theta: Fraction | int | str) -> Fraction:
    """Return gamma_1 = N/(2 - theta) with N = n + 2."""
    return Fraction(n + 2) / (TWO - as_rational(theta))


def pressure_only_gamma(n: int) -> Fraction:
    """Return gamma_0 = N/2, the pressure-alone threshold."""
    return Fraction(n + 2, 2)


def mu_gamma(n: int, theta: Fraction | int | str, gamma: Fraction | int | str) -> Fraction:
    """Return mu(gamma) = (1 - theta) N gamma / (N - gamma) with N = n + 2.

    At theta = 1 the point gamma = N is a removable singularity of mu along
    gamma_1(theta) = N/(2 - theta) and evaluates to N.

    Raises:
        GammaOutOfRange: If gamma is not in (2, N)

    Examples:
        >>> mu_gamma(3, 0, Fraction(5, 2))
        Fraction(5, 1)
    """
    if n < 3:
        raise ValidationError(f"Dimension must be at least 3, got {n}")
    theta = as_rational(theta)
    gamma = as_rational(gamma)
    big_n = Fraction(n + 2)
    if theta == ONE and gamma == big_n:
        return big_n
    if not TWO < gamma < big_n:
        raise GammaOutOfRange(f"gamma must lie in (2, {big_n}), got {gamma}")
    return (ONE - theta) * big_n * gamma / (big_n - gamma)


def q_constraint_check(n: int, p: Fraction | int | str, q: Fraction | int | str) -> bool:
    """Check the extra constraint p <= (n-2) q/(n-q) required when 2 <= q < n.

    Returns:
        True iff q >= n, or 2 <= q < n and p <= (n-2) q/(n-q)
    """
    p = as_rational(p)
    q = as_rational(q)
    if q >= n:
        return True
    if q < 2:
        return False
    return p <= (n - 2) * q / (n - q)


def classify(line: CriterionLine, p: ExtendedRational | int | str, q: ExtendedRational | int | str) -> Classification:
    """Classify (p, q) as sitting on the line, strictly below it, or above it.

    Examples:
        >>> classify(criterion_line("LPS"), 8, 4)
        <Classification.STRONG: 'Strong'>
    """
    p = parse_extended(p)
    q = parse_extended(q)
    total = line.scaling_sum(p, q)
    if total == line.rhs:
        return Classification.STRONG
    if total < line.rhs:
        return Classification.MILD
    return Classification.INVALID


def gronwall_time_exponent(n: int, q: Fraction | int | str) -> Fraction:
    """Return p with 2/p + n/q = 1 for the L^p(L^q) Gronwall envelope.

    Raises:
        QOutOfRange: If q <= n
    """
    q = as_rational(q)
    if q <= n:
        raise QOutOfRange(f"The Gronwall envelope needs q > n = {n}, got {q}")
    return Fraction(solve_p(criterion_line(CriterionKind.LPS, n), q))
