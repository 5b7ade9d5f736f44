"""Blip, decision-rule, regret and pseudo-outcome evaluation."""

from collections.abc import Mapping
from typing import Any

import numpy as np
import pandas as pd
from stage_data import ConfigurationError, DataValidationError

from .models import BlipModel, Covariates, EstimatorMethod, PseudoOutcome


def as_frame(h: Covariates) -> pd.DataFrame:
    """Covariate rows as a frame; a mapping of scalars is one patient."""
    if isinstance(h, pd.DataFrame):
        return h
    if isinstance(h, Mapping):
        if all(np.ndim(value) == 0 for value in h.values()):
            return pd.DataFrame({key: [value] for key, value in h.items()})
        return pd.DataFrame(dict(h))
    raise DataValidationError(f"cannot read covariates from {type(h).__name__}")


def _actions(a: Any, n: int) -> np.ndarray:
    actions = np.broadcast_to(np.asarray(a, dtype=float), (n,))
    if not np.all(np.isin(actions, (0.0, 1.0))):
        raise DataValidationError("treatments must be 0 or 1")
    return actions


def contrast(model: BlipModel, h: Covariates) -> np.ndarray:
    """Treatment contrast ``psi0 + sum_j psi_j * term_j(h)`` per row.

    Raises:
        DataValidationError: If a term cannot be evaluated on ``h``.
    """
    frame = as_frame(h)
    values = np.full(len(frame), model.psi0)
    for term, coefficient in zip(model.terms, model.psi, strict=True):
        values = values + coefficient * term.evaluate(frame)
    return values


def blip_value(model: BlipModel, h: Covariates, a: Any) -> np.ndarray:
    """Blip ``a * contrast(h)``; zero for the reference treatment."""
    c = contrast(model, h)
    return _actions(a, len(c)) * c


def optimal_action(model: BlipModel, h: Covariates) -> np.ndarray:
    """``1`` where the contrast is strictly positive, else ``0``."""
    return (contrast(model, h) > 0.0).astype(int)


def regret(model: BlipModel, h: Covariates, a: Any) -> np.ndarray:
    """Blip at the optimal action minus blip at ``a``; never negative."""
    c = contrast(model, h)
    best = (c > 0.0).astype(float)
    return (best - _actions(a, len(c))) * c


def pseudo_outcome(
    y_next: np.ndarray,
    model: BlipModel,
    h: Covariates,
    a: np.ndarray,
    method: EstimatorMethod = EstimatorMethod.PDWOLS,
    treatment_free: np.ndarray | None = None,
    stage: int = 0,
) -> PseudoOutcome:
    """Response for the next-earlier stage.

    ``pdwols`` adds the downstream regret to the observed response.
    ``qlasso`` replaces the response by the fitted treatment-free part plus the
    blip at the estimated optimum.

    Args:
        y_next: Response of the downstream stage.
        model: Fitted downstream blip.
        h: Downstream covariate history.
        a: Downstream treatments actually received.
        method: Stage estimator the recursion runs.
        treatment_free: Fitted treatment-free values (``qlasso`` only).
        stage: Stage index the pseudo-outcome is used at.

    Raises:
        ConfigurationError: If ``qlasso`` is requested without treatment-free
            values.
        DataValidationError: On length mismatches.
    """
    y = np.asarray(y_next, dtype=float)
    frame = as_frame(h)
    if len(frame) != len(y):
        raise DataValidationError(
            f"response has {len(y)} rows, history has {len(frame)}"
        )
    if method is EstimatorMethod.PDWOLS:
        return PseudoOutcome(values=y + regret(model, frame, a), stage=stage)

    if treatment_free is None:
        raise ConfigurationError("qlasso pseudo-outcomes need treatment_free values")
    fitted = np.asarray(treatment_free, dtype=float)
    if fitted.shape != y.shape:
        raise DataValidationError("treatment_free and response lengths differ")
    c = contrast(model, frame)
    return PseudoOutcome(values=fitted + np.where(c > 0.0, c, 0.0), stage=stage)
