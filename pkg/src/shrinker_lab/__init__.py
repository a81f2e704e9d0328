"""Numerical laboratory for closed Lagrangian self-shrinkers and their F-stability."""
from .catalog import ModelSpec, build_model, parse_model
from .errors import ShrinkerLabError
from .geometry import ImmersionField, lagrangian_defect, shrinker_residual
from .grid import ParamGrid, PeriodicDiff

__all__ = ["ImmersionField", "ModelSpec", "ParamGrid", "PeriodicDiff", "ShrinkerLabError", "build_model",
           "lagrangian_defect", "parse_model", "shrinker_residual"]
__version__ = "0.1.0"
