"""Numerical Grunbaum-type cut bounds and their verification."""

from .errors import (DomainError, GrunbaumLabError, InconsistencyError, InvalidArgumentError,
                     NumericFailure, PreconditionError)

__version__ = "0.1.0"
