"""Exception hierarchy.

Input problems (bad CSV, bad arguments) derive from ``ValueError``; failures
that only show up once the numbers are crunched (singular scatter, a matrix
that is not positive definite) derive from ``ArithmeticError``.  The CLI maps
the first family to exit code 2 and the second to exit code 3.
"""


class DataError(ValueError):
    """Malformed interval data."""


class DomainError(ValueError):
    """Argument outside the domain of a function (df too small, z at a pole)."""


class NumericalError(ArithmeticError):
    """Base class for numerical failures."""


class NotPositiveDefiniteError(NumericalError):
    """A matrix that must be symmetric positive definite is not."""


class EstimationError(NumericalError):
    """An estimator is undefined for the given sufficient statistics."""
