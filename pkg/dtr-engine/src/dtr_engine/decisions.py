"""Applying an estimated regime to patients."""

import numpy as np
import pandas as pd
from stage_data import DataValidationError, MultiStageTrial

from .blip import contrast, optimal_action
from .models import Covariates, Regime


def _check_stages(regime: Regime, trial: MultiStageTrial) -> None:
    if trial.n_stages != regime.n_stages:
        raise DataValidationError(
            f"regime has {regime.n_stages} stages, trial has {trial.n_stages}"
        )


def decide(regime: Regime, h: Covariates, stage: int = 1) -> np.ndarray:
    """Recommended treatment at ``stage`` for every row of ``h``."""
    return optimal_action(regime.stage(stage), h)


def recommend(regime: Regime, trial: MultiStageTrial) -> np.ndarray:
    """``(n, K)`` recommendations given each patient's observed history.

    Stage ``k`` decisions use the treatments actually received before ``k``.
    """
    _check_stages(regime, trial)
    return np.column_stack(
        [
            optimal_action(regime.stage(stage), trial.history(stage))
            for stage in range(1, trial.n_stages + 1)
        ]
    )


def decision_table(regime: Regime, trial: MultiStageTrial) -> pd.DataFrame:
    """Per-patient received treatment, contrast and recommendation per stage."""
    _check_stages(regime, trial)
    columns: dict[str, np.ndarray | list[str]] = {
        "id": list(trial.ids) if trial.ids else [str(i) for i in range(trial.n)]
    }
    for stage in range(1, regime.n_stages + 1):
        history = trial.history(stage)
        c = contrast(regime.stage(stage), history)
        columns[f"a_s{stage}"] = trial.stages[stage - 1].a.astype(int)
        columns[f"contrast_s{stage}"] = c
        columns[f"recommended_s{stage}"] = (c > 0.0).astype(int)
    return pd.DataFrame(columns)
