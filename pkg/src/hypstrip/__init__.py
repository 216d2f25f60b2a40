"""Hyperbolic Navier-Stokes in a thin strip: Gevrey norms, solvers and bound monitors."""

from .config import RunConfig, parse_config, serialize_config
from .errors import (BlowUpError, ConfigError, ConstraintDriftError, DomainError, HypStripError,
                     PrecisionError, PressureCompatibilityError, StabilityError, StructuralError)
from .gevrey import (NormSymbol, RadiusSchedule, SymbolKind, WeightTable, certify_weight_inequalities,
                     log_weight, norm_symbol, radius, weight)
from .grid import Field, StripGrid
from .hydro import HydroSolver, HydroState, make_initial_data, solve_pressure
from .aniso import AnisoSolver, AnisoState, divergence_residual, solve_pressure_aniso
from .limit import SweepPlan, run_sweep

__all__ = [
    "RunConfig", "parse_config", "serialize_config",
    "HypStripError", "DomainError", "PrecisionError", "StructuralError", "StabilityError",
    "BlowUpError", "ConstraintDriftError", "PressureCompatibilityError", "ConfigError",
    "NormSymbol", "RadiusSchedule", "SymbolKind", "WeightTable", "certify_weight_inequalities",
    "log_weight", "norm_symbol", "radius", "weight",
    "Field", "StripGrid", "HydroSolver", "HydroState", "make_initial_data", "solve_pressure",
    "AnisoSolver", "AnisoState", "divergence_residual", "solve_pressure_aniso",
    "SweepPlan", "run_sweep",
]
