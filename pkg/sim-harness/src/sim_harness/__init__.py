"""Sim Harness - data generators, regime metrics and simulation experiments."""

from .export import (
    coefficient_rows,
    estimate_rows,
    export_report_json,
    replicate_rows,
    report_to_dict,
    selection_rows,
    write_report,
)
from .generators import (
    OneStageGenerator,
    PolicyOutcome,
    SimulatedTrial,
    TrialGenerator,
    TwoStageGenerator,
    augment_noise,
    make_generator,
    noise_draws,
)
from .metrics import (
    error_rate,
    evaluate_regime,
    selection_errors,
    stage_error_rates,
    summarize,
    summarize_method,
    value_estimate,
)
from .models import (
    CoefficientSummary,
    GeneratorKind,
    MethodSpec,
    MethodSummary,
    MetricsReport,
    RegimeEvaluation,
    ReplicateResult,
    ScenarioConfig,
    load_scenario,
)
from .runner import ExperimentRunner, penalized_regime, run_experiment

__version__ = "0.1.0"
__all__ = [
    "CoefficientSummary",
    "ExperimentRunner",
    "GeneratorKind",
    "MethodSpec",
    "MethodSummary",
    "MetricsReport",
    "OneStageGenerator",
    "PolicyOutcome",
    "RegimeEvaluation",
    "ReplicateResult",
    "ScenarioConfig",
    "SimulatedTrial",
    "TrialGenerator",
    "TwoStageGenerator",
    "augment_noise",
    "coefficient_rows",
    "error_rate",
    "estimate_rows",
    "evaluate_regime",
    "export_report_json",
    "load_scenario",
    "make_generator",
    "noise_draws",
    "penalized_regime",
    "replicate_rows",
    "report_to_dict",
    "run_experiment",
    "selection_errors",
    "selection_rows",
    "stage_error_rates",
    "summarize",
    "summarize_method",
    "value_estimate",
    "write_report",
]
