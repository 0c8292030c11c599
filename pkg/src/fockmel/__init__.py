"""Analytic Hylleraas-type integrals with logarithmic terms for two-electron atoms."""

from .errors import ConvergenceError, CholeskyError, FockmelError, IndexSetError, NumericalError
from .integrals import PCache, PKey, p_integral
from .specfun import get_precision, set_precision, working_precision

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "CholeskyError", "FockmelError", "IndexSetError", "NumericalError",
    "PCache", "PKey", "p_integral", "get_precision", "set_precision", "working_precision",
]
