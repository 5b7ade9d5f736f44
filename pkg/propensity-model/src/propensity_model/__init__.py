"""Propensity Model - logistic treatment models and dWOLS balancing weights."""

from .logistic import (
    clip_probabilities,
    fit_logistic,
    log_likelihood,
    predict_propensity,
    probabilities_from_linear_predictor,
)
from .models import PropensityModel, WeightSource, WeightVector
from .weights import (
    dwols_weights,
    estimate_weights,
    export_weights_csv,
    null_weights,
    user_weights,
)

__version__ = "0.1.0"
__all__ = [
    "PropensityModel",
    "WeightSource",
    "WeightVector",
    "clip_probabilities",
    "dwols_weights",
    "estimate_weights",
    "export_weights_csv",
    "fit_logistic",
    "log_likelihood",
    "null_weights",
    "predict_propensity",
    "probabilities_from_linear_predictor",
    "user_weights",
]
