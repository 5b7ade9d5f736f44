"""Logistic regression by iteratively reweighted least squares."""

import logging
from collections.abc import Sequence

import numpy as np
import pandas as pd
from scipy.special import expit
from stage_data import DataValidationError, Term

from .models import PropensityModel

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 50
COEFFICIENT_TOL = 1e-8
PROBABILITY_FLOOR = 1e-6
SEPARATION_ETA = 20.0
MAX_STEP_HALVINGS = 30


def _design(covariates: pd.DataFrame, terms: Sequence[Term]) -> np.ndarray:
    columns = [np.ones(len(covariates))]
    columns.extend(term.evaluate(covariates) for term in terms)
    return np.column_stack(columns)


def log_likelihood(z: np.ndarray, a: np.ndarray, coefficients: np.ndarray) -> float:
    """Bernoulli log-likelihood of a logistic model."""
    eta = z @ coefficients
    return float(np.sum(a * eta - np.logaddexp(0.0, eta)))


def fit_logistic(
    covariates: pd.DataFrame,
    a: np.ndarray,
    terms: Sequence[Term] = (),
    max_iter: int = MAX_ITERATIONS,
    tol: float = COEFFICIENT_TOL,
) -> PropensityModel:
    """Fit P(A=1 | x) by Newton-Raphson (IRLS) with step halving.

    Args:
        covariates: Frame holding the columns named by ``terms``.
        a: 0/1 treatment vector.
        terms: Covariate terms; empty fits the intercept-only model.
        max_iter: Iteration cap.
        tol: Convergence threshold on the maximum coefficient change.

    Returns:
        The fitted model. Separation is reported on the model, not raised.

    Raises:
        DataValidationError: If the treatment is constant or there are fewer
            rows than coefficients.
    """
    treatment = np.asarray(a, dtype=float)
    z = _design(covariates, terms)
    n, k = z.shape
    if len(treatment) != n:
        raise DataValidationError("treatment and covariate rows differ")
    if np.all(treatment == treatment[0]):
        raise DataValidationError(
            "treatment is constant; no propensity model can be fit"
        )
    if n < k + 1:
        raise DataValidationError(
            f"propensity model needs at least {k + 1} rows, got {n}"
        )

    coefficients = np.zeros(k)
    current = log_likelihood(z, treatment, coefficients)
    trace = [current]
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        mu = expit(z @ coefficients)
        variance = mu * (1.0 - mu)
        gradient = z.T @ (treatment - mu)
        hessian = z.T @ (variance[:, None] * z)
        step, *_ = np.linalg.lstsq(hessian, gradient, rcond=None)

        scale = 1.0
        candidate = coefficients + step
        proposed = log_likelihood(z, treatment, candidate)
        for _ in range(MAX_STEP_HALVINGS):
            if proposed >= current - 1e-10:
                break
            scale /= 2.0
            candidate = coefficients + scale * step
            proposed = log_likelihood(z, treatment, candidate)
        else:
            candidate, proposed = coefficients, current

        change = float(np.max(np.abs(candidate - coefficients)))
        coefficients, current = candidate, proposed
        trace.append(current)
        if change < tol:
            converged = True
            break

    max_eta = float(np.max(np.abs(z @ coefficients)))
    separated = not converged or max_eta > SEPARATION_ETA
    if separated:
        logger.warning(
            "Propensity fit shows separation (max |eta| = %.1f, converged=%s); "
            "probabilities will be clipped",
            max_eta,
            converged,
        )
    return PropensityModel(
        coefficients=coefficients,
        terms=tuple(terms),
        converged=converged,
        iterations=iteration,
        separated=separated,
        log_likelihood=tuple(trace),
    )


def clip_probabilities(pi: np.ndarray) -> np.ndarray:
    """Clip probabilities to [1e-6, 1 - 1e-6]."""
    return np.clip(pi, PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)


def probabilities_from_linear_predictor(eta: np.ndarray) -> np.ndarray:
    """Clipped expit of a linear predictor."""
    return clip_probabilities(expit(np.asarray(eta, dtype=float)))


def predict_propensity(model: PropensityModel, covariates: pd.DataFrame) -> np.ndarray:
    """Predicted P(A=1 | x) for every row of ``covariates``."""
    return probabilities_from_linear_predictor(
        _design(covariates, model.terms) @ model.coefficients
    )
