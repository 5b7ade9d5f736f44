"""DTR Engine - blip functions, decision rules and backward-recursive regimes."""

from .backward import backward_fit, fit_regime
from .blip import (
    as_frame,
    blip_value,
    contrast,
    optimal_action,
    pseudo_outcome,
    regret,
)
from .decisions import decide, decision_table, recommend
from .estimator import PenalizedStageEstimator, penalty_mode
from .models import (
    BlipModel,
    Covariates,
    EstimatorMethod,
    EstimatorSettings,
    EstimatorTag,
    PseudoOutcome,
    Regime,
    RegimeFit,
    StageFit,
    WeightScheme,
)
from .serialize import (
    export_decisions_csv,
    export_regime_json,
    export_rows_csv,
    load_regime,
    stage_fit_rows,
)

__version__ = "0.1.0"
__all__ = [
    "BlipModel",
    "Covariates",
    "EstimatorMethod",
    "EstimatorSettings",
    "EstimatorTag",
    "PenalizedStageEstimator",
    "PseudoOutcome",
    "Regime",
    "RegimeFit",
    "StageFit",
    "WeightScheme",
    "as_frame",
    "backward_fit",
    "blip_value",
    "contrast",
    "decide",
    "decision_table",
    "export_decisions_csv",
    "export_regime_json",
    "export_rows_csv",
    "fit_regime",
    "load_regime",
    "optimal_action",
    "penalty_mode",
    "pseudo_outcome",
    "recommend",
    "regret",
    "stage_fit_rows",
]
