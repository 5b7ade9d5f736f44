"""Backward-recursive estimation of multi-stage regimes."""

import logging
from collections.abc import Sequence

import numpy as np
from stage_data import ConfigurationError, ModelSpec, MultiStageTrial

from .blip import pseudo_outcome
from .estimator import PenalizedStageEstimator
from .models import (
    EstimatorMethod,
    EstimatorSettings,
    EstimatorTag,
    PseudoOutcome,
    Regime,
    RegimeFit,
    StageFit,
)

logger = logging.getLogger(__name__)


def fit_regime(
    trial: MultiStageTrial,
    specs: Sequence[ModelSpec],
    settings: EstimatorSettings | None = None,
    weights: Sequence[np.ndarray] | None = None,
) -> RegimeFit:
    """Estimate stages K..1, feeding each stage a pseudo-outcome from the next.

    Args:
        trial: Multi-stage data with the final outcome.
        specs: One model specification per stage, stage 1 first.
        settings: Stage estimator tuning shared by every stage.
        weights: Per-stage weight vectors for the ``user`` weight scheme.

    Returns:
        The regime with its stage fits and the pseudo-outcomes used.

    Raises:
        ConfigurationError: If the number of specs or weight vectors does not
            match the number of stages.
    """
    estimator = PenalizedStageEstimator(settings)
    method = estimator.settings.method
    k = trial.n_stages
    if len(specs) != k:
        raise ConfigurationError(f"got {len(specs)} model specs for {k} stages")
    if weights is not None and len(weights) != k:
        raise ConfigurationError(f"got {len(weights)} weight vectors for {k} stages")

    response = trial.y
    fits: list[StageFit] = []
    outcomes: list[PseudoOutcome] = []
    for stage in range(k, 0, -1):
        data = trial.stage_dataset(stage, response)
        stage_fit = estimator.fit(
            data,
            specs[stage - 1],
            stage=stage,
            weights=None if weights is None else weights[stage - 1],
        )
        fits.append(stage_fit)
        if stage == 1:
            break
        treatment_free = (
            stage_fit.treatment_free(data.covariates)
            if method is EstimatorMethod.QLASSO
            else None
        )
        outcome = pseudo_outcome(
            response,
            stage_fit.model,
            data.covariates,
            data.a,
            method=method,
            treatment_free=treatment_free,
            stage=stage - 1,
        )
        logger.debug(
            "Pseudo-outcome for stage %d: mean shift %.4g",
            stage - 1,
            float(np.mean(outcome.values - response)),
        )
        outcomes.append(outcome)
        response = outcome.values

    fits.reverse()
    outcomes.reverse()
    tag = EstimatorTag(
        method=method,
        refit=estimator.settings.refit,
        adaptive=estimator.settings.adaptive,
        alpha=estimator.settings.alpha,
        lambdas=tuple(fit.lambda_ for fit in fits),
    )
    regime = Regime(stages=tuple(fit.model for fit in fits), tag=tag)
    return RegimeFit(
        regime=regime, stage_fits=tuple(fits), pseudo_outcomes=tuple(outcomes)
    )


def backward_fit(
    trial: MultiStageTrial,
    specs: Sequence[ModelSpec],
    settings: EstimatorSettings | None = None,
    weights: Sequence[np.ndarray] | None = None,
) -> Regime:
    """Estimated regime of :func:`fit_regime` without the intermediate fits."""
    return fit_regime(trial, specs, settings, weights).regime
