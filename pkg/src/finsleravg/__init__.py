"""Averaging of Lorentz-Finsler structures into Lorentzian metrics and affine connections."""

__version__ = "0.1.0"

from .expr import parse, evaluate, to_string
from .lagrangians import Lagrangian, preset, PRESETS
from .finsler import FiberPoint, fundamental_tensor, chern_connection, causal_character, verify_structure
from .averaging import TimelikeField, average_lorentzian_metric, check_timelike_condition
from .connection import average_connection, compare_levi_civita
from .quadrature import QuadratureConfig, WeightSpec

__all__ = [
    "parse", "evaluate", "to_string", "Lagrangian", "preset", "PRESETS", "FiberPoint",
    "fundamental_tensor", "chern_connection", "causal_character", "verify_structure",
    "TimelikeField", "average_lorentzian_metric", "check_timelike_condition",
    "average_connection", "compare_levi_civita", "QuadratureConfig", "WeightSpec",
]
