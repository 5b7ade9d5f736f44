"""Model Selection - cross-validation, adaptive penalty factors and refitting."""

from .adaptive import (
    FACTOR_CAP,
    FactorRule,
    adaptive_factor_rule,
    adaptive_factors,
    factors_from_pilot,
    pilot_fit,
)
from .cross_validation import assign_folds, kfold_cv
from .export import cv_to_dict, export_cv_csv, export_cv_json
from .models import AdaptiveFactors, CvResult, PilotKind, SelectionRule, Support
from .refit import refit

__version__ = "0.1.0"
__all__ = [
    "FACTOR_CAP",
    "AdaptiveFactors",
    "CvResult",
    "FactorRule",
    "PilotKind",
    "SelectionRule",
    "Support",
    "adaptive_factor_rule",
    "adaptive_factors",
    "assign_folds",
    "cv_to_dict",
    "export_cv_csv",
    "export_cv_json",
    "factors_from_pilot",
    "kfold_cv",
    "pilot_fit",
    "refit",
]
