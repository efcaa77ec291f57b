"""WKB quasi-solutions, reference solvers and ray diagnostics for ``i u_t + (-Delta)^s u = 0`` in 1-D."""

__version__ = "0.1.0"

from .errors import (ContractError, DivergenceError, DomainError, FracWkbError, NumericalError,
                     QuadratureError, ResolutionError)
from .frac_core import FracContext, apply_fraclap_direct, apply_fraclap_spectral, normalization_constant
from .grid import ComplexField, Grid1D

__all__ = [
    "ComplexField", "ContractError", "DivergenceError", "DomainError", "FracContext", "FracWkbError",
    "Grid1D", "NumericalError", "QuadratureError", "ResolutionError", "apply_fraclap_direct",
    "apply_fraclap_spectral", "normalization_constant",
]
