"""Exception types shared across the package."""


class FockmelError(Exception):
    """Base class for package errors."""


class IndexSetError(FockmelError, ValueError):
    """An integral index falls outside the set reachable from the basis."""


class NumericalError(FockmelError, ArithmeticError):
    """A numerical procedure failed (breakdown, residue, non-convergence)."""


class ConvergenceError(NumericalError):
    """An iterative procedure exhausted its budget."""


class CholeskyError(NumericalError):
    """Cholesky factorization broke down on a matrix expected to be definite."""

    def __init__(self, message, index=None, pivot=None):
        super().__init__(message)
        self.index = index
        self.pivot = pivot
