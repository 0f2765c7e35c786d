"""Exception hierarchy.

Errors split into two families so the CLI can map them to exit codes:
``InputError`` (bad arguments, exit 2) and ``NumericalError`` (rank loss,
singularity and friends, exit 3).
"""


class CertError(Exception):
    """Base class for all package errors."""


class InputError(CertError, ValueError):
    pass


class NumericalError(CertError, ArithmeticError):
    pass


class InvalidSpacing(InputError):
    pass


class TooFewNodes(InputError):
    pass


class InvalidSmoothness(InputError):
    pass


class InsufficientSmoothness(InputError):
    pass


class NothingToSplit(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class RankDeficient(NumericalError):
    pass


class Singular(NumericalError):
    pass


class NoSolution(NumericalError):
    pass


class GeometryDegenerate(NumericalError):
    pass


class ExactnessViolated(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class NegativeQuadraticForm(NumericalError):
    """Raw quadratic form is negative beyond the cancellation guard."""
