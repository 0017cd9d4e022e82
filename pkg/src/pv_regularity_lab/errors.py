# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Exception hierarchy shared by all laboratory modules.

Validation problems derive from ``ValueError`` and file format problems from
``OSError`` so callers can keep catching the built-in types.
"""


class PVLabError(Exception):
    """Base class for every error raised by the laboratory."""


class ValidationError(PVLabError, ValueError):
    """An input violates a documented precondition or invariant."""


class ThetaOutOfRange(ValidationError):
    """theta lies outside the range admitted by the criterion."""


class QOutOfRange(ValidationError):
    """q does not leave a positive, finite time exponent on the line."""


class GammaOutOfRange(ValidationError):
    """gamma lies outside the open interval (2, N)."""


class DegenerateLine(ValidationError):
    """The criterion line has a zero right-hand side."""


class ExponentOutOfRange(ValidationError):
    """A Lebesgue or Lorentz exponent lies outside its admissible range."""


class ExponentRelationViolated(ValidationError):
    """Exponents do not satisfy a required exact relation."""


class ExponentInfeasible(ValidationError):
    """No admissible auxiliary exponents exist for the configured (theta, q)."""


class GridMismatch(ValidationError):
    """Fields live on different grids."""


class DomainMismatch(ValidationError):
    """The operation is not defined for the grid's domain."""


class NotSolenoidal(ValidationError):
    """A velocity field has divergence beyond tolerance."""


class NonPositiveShift(ValidationError):
    """The shift V is not strictly positive."""


class ConstantField(ValidationError):
    """The field has zero gradient, so a gradient ratio is undefined."""


class StabilityViolation(ValidationError):
    """The time step exceeds the CFL or viscous bound."""


class InsufficientSnapshots(ValidationError):
    """Too few or irregularly spaced snapshots for time differencing."""


class ParseError(ValidationError):
    """A configuration text could not be parsed.

    Attributes:
        line_number: 1-based line of the offending entry, or None for whole-document problems
    """

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class FormatError(PVLabError, OSError):
    """A snapshot or registry file is malformed."""


class VersionMismatch(FormatError):
    """A snapshot file carries an unsupported format version."""


class HashMismatch(ValidationError):
    """An artifact was produced under a different configuration hash."""
