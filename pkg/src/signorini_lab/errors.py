"""Exception types shared across the package."""

from __future__ import annotations


class SignoriniError(Exception):
    """Base class for all package errors."""


class OutOfDomainError(SignoriniError, ValueError):
    """A point or ball leaves the computational box."""


class ResolutionError(SignoriniError, ValueError):
    """A radius is too small for the grid to resolve."""


class PreconditionError(SignoriniError, ValueError):
    """An operation was called on inputs violating its preconditions."""


class NotConvergedError(SignoriniError, RuntimeError):
    """The PSOR iteration hit ``max_iters`` with residuals above tolerance.

    The partial result is attached as ``result``.
    """

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class NotQuadraticPointError(SignoriniError, ValueError):
    """A fitted first blow-up has a clearly negative eigenvalue."""


class InsufficientRangeError(SignoriniError, ValueError):
    """Too few usable samples for a power-law fit."""


class FamilyError(SignoriniError, RuntimeError):
    """A member of a monotone family failed to solve."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t
