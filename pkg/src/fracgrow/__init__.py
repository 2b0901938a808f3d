"""Spectral Galerkin solver and limit-study harness for a relaxed tumor-growth system
with fractional operators and Moreau-Yosida regularized potentials."""

from .errors import (
    AssumptionError,
    AssumptionWarning,
    BasisMismatchError,
    ConfigError,
    FracgrowError,
    NumericalError,
    StepFailure,
)
from .potentials import Potential, Proliferation, YosidaLevel
from .scheme import Forcing, ProblemConfig, Trajectory, simulate, step
from .spectral import EigenBasis, Field, FractionalOperator, make_interval_basis, make_rectangle_basis

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "AssumptionWarning",
    "BasisMismatchError",
    "ConfigError",
    "FracgrowError",
    "NumericalError",
    "StepFailure",
    "Potential",
    "Proliferation",
    "YosidaLevel",
    "Forcing",
    "ProblemConfig",
    "Trajectory",
    "simulate",
    "step",
    "EigenBasis",
    "Field",
    "FractionalOperator",
    "make_interval_basis",
    "make_rectangle_basis",
    "__version__",
]
