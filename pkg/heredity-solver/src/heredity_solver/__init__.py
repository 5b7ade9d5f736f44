"""Heredity Solver - strong-heredity penalized weighted least squares."""

from .models import HeredityFit, LambdaPath, PenaltyMode, PenaltySpec, SolverControl
from .problem import Problem, objective
from .screening import always_active_fit, kkt_check, lambda_max
from .serialize import fit_to_dict, path_to_dict, write_json
from .solver import cd_fit, default_min_ratio, fit_path, lambda_grid, soft_threshold

__version__ = "0.1.0"
__all__ = [
    "HeredityFit",
    "LambdaPath",
    "PenaltyMode",
    "PenaltySpec",
    "Problem",
    "SolverControl",
    "always_active_fit",
    "cd_fit",
    "default_min_ratio",
    "fit_path",
    "fit_to_dict",
    "kkt_check",
    "lambda_grid",
    "lambda_max",
    "objective",
    "path_to_dict",
    "soft_threshold",
    "write_json",
]
