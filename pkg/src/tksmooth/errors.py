"""Exception types shared across the package."""


class SmootherError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(SmootherError, ValueError):
    """A matrix expected to be SPD failed its Cholesky factorization."""


class DimensionMismatch(SmootherError, ValueError):
    """Operand shapes do not agree."""


class SolverFailure(SmootherError, RuntimeError):
    """A smoother run ended in a non-converged status."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
