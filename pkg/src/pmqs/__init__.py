"""Simulation and verification lab for slowly modulated intermittent maps."""

__version__ = "0.1.0"

from .density import ConeCheckReport, GridDensity, cone_check
from .errors import (ConfigError, ConvergenceError, DomainError, NumericsError,
                     SchemaError)
from .maps import Trajectory, apply_map, inverse_branches, iterate_sequential, map_derivative
from .schedule import ParameterArrayRow, ParameterCurve, curve_eval, equipartition
from .ulam import (UlamOperator, build_ulam, decay_envelope,
                   leftmost_preimage_length, memory_loss_curve,
                   perturbation_distances, pushforward_sequence, srb_density)

__all__ = [
    "__version__",
    "ConeCheckReport", "GridDensity", "cone_check",
    "ConfigError", "ConvergenceError", "DomainError", "NumericsError",
    "SchemaError",
    "Trajectory", "apply_map", "inverse_branches", "iterate_sequential",
    "map_derivative",
    "ParameterArrayRow", "ParameterCurve", "curve_eval", "equipartition",
    "UlamOperator", "build_ulam", "decay_envelope",
    "leftmost_preimage_length", "memory_loss_curve",
    "perturbation_distances", "pushforward_sequence", "srb_density",
]
