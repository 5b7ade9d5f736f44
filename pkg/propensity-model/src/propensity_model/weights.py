"""dWOLS balancing weights and their CSV audit export."""

import csv
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from stage_data import DataValidationError, Term

from .logistic import fit_logistic, predict_propensity
from .models import PropensityModel, WeightSource, WeightVector

logger = logging.getLogger(__name__)


def dwols_weights(a: np.ndarray, pi: np.ndarray) -> WeightVector:
    """Absolute-value balancing weights ``w = |a - pi|``.

    Raises:
        DataValidationError: If any probability lies outside (0, 1) or the
            vectors differ in length.
    """
    treatment = np.asarray(a, dtype=float)
    probabilities = np.asarray(pi, dtype=float)
    if treatment.shape != probabilities.shape:
        raise DataValidationError("treatment and propensity lengths differ")
    if np.any(probabilities <= 0.0) or np.any(probabilities >= 1.0):
        raise DataValidationError("propensities must lie strictly inside (0, 1)")
    return WeightVector(
        w=np.abs(treatment - probabilities), source=WeightSource.ESTIMATED
    )


def null_weights(n: int) -> WeightVector:
    """All-ones weights (unweighted regression)."""
    if n < 1:
        raise DataValidationError("n must be at least 1")
    return WeightVector(w=np.ones(n), source=WeightSource.ALL_ONES)


def user_weights(w: Sequence[float] | np.ndarray) -> WeightVector:
    """Wrap externally supplied weights."""
    return WeightVector(w=np.asarray(w, dtype=float), source=WeightSource.USER_SUPPLIED)


def estimate_weights(
    covariates: pd.DataFrame, a: np.ndarray, terms: Sequence[Term]
) -> tuple[PropensityModel, WeightVector]:
    """Fit the treatment model and return it with its dWOLS weights.

    With no terms the model is intercept-only and the weights are tagged as
    coming from the null model.
    """
    model = fit_logistic(covariates, a, terms)
    weights = dwols_weights(a, predict_propensity(model, covariates))
    if not terms:
        weights = WeightVector(w=weights.w, source=WeightSource.NULL_MODEL)
    return model, weights


def export_weights_csv(
    weights: WeightVector,
    file_path: Path,
    pi: np.ndarray | None = None,
    ids: Sequence[str] | None = None,
) -> bool:
    """Write one row per observation with its weight (and propensity if given)."""
    fieldnames = ["row", "id", "propensity", "weight", "source"]
    try:
        with Path(file_path).open("w", newline="", encoding="utf-8") as csvfile:
            writer = csv.DictWriter(csvfile, fieldnames=fieldnames)
            writer.writeheader()
            for index, value in enumerate(weights.w):
                writer.writerow(
                    {
                        "row": index,
                        "id": ids[index] if ids else None,
                        "propensity": (
                            repr(float(pi[index])) if pi is not None else None
                        ),
                        "weight": repr(float(value)),
                        "source": weights.source.value,
                    }
                )
    except OSError as e:
        logger.error("Could not write weights to %s: %s", file_path, e)
        return False
    else:
        return True
