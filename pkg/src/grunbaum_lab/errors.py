"""Exception hierarchy shared by every module."""


class GrunbaumLabError(Exception):
    """Base class for all library errors."""


class DomainError(GrunbaumLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InvalidArgumentError(GrunbaumLabError, ValueError):
    """An argument is malformed (NaN, wrong shape, non-monotone, ...)."""


class PreconditionError(GrunbaumLabError, ValueError):
    """A declared hypothesis of a bound (concavity, symmetry, ...) fails."""


class NumericFailure(GrunbaumLabError, ArithmeticError):
    """Quadrature or root search did not reach the requested accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class InconsistencyError(GrunbaumLabError, ArithmeticError):
    """Two independent computations of the same quantity disagree."""

    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = values
