"""Semantic exception hierarchy.

Domain errors mean the caller violated a documented precondition; internal
errors mean a construction that is guaranteed to exist could not be realized
numerically (and should be reported, not silently patched).
"""


class GsumError(Exception):
    """Base class for all package errors."""


class DomainError(GsumError, ValueError):
    """An input violates a documented precondition."""


class AdmissionError(DomainError):
    """A distribution fails an admission gate (tail-norm / centering / ratio)."""


class InternalError(GsumError, RuntimeError):
    """A numerically guaranteed construction failed to converge."""


class SearchBudgetExceeded(GsumError, RuntimeError):
    """A certified object exists but was not found within the search budget.

    Carries the best uncertified candidate found, for reporting.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
