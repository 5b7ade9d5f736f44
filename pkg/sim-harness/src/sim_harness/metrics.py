"""Regime quality metrics and their aggregation over replicates."""

import logging
from collections.abc import Sequence

import numpy as np
from dtr_engine import Regime

from .generators import SeedLike, TrialGenerator
from .models import (
    CoefficientSummary,
    MethodSummary,
    MetricsReport,
    RegimeEvaluation,
    ReplicateResult,
    ScenarioConfig,
)

logger = logging.getLogger(__name__)


def _as_matrix(values: np.ndarray) -> np.ndarray:
    array = np.asarray(values)
    return array[:, np.newaxis] if array.ndim == 1 else array


def stage_error_rates(actions: np.ndarray, optimal: np.ndarray) -> tuple[float, ...]:
    """Fraction of patients whose action differs from the optimum, per stage."""
    disagree = _as_matrix(actions) != _as_matrix(optimal)
    return tuple(float(rate) for rate in disagree.mean(axis=0))


def error_rate(actions: np.ndarray, optimal: np.ndarray) -> float:
    """Fraction of patients with a non-optimal action at any stage."""
    disagree = _as_matrix(actions) != _as_matrix(optimal)
    return float(disagree.any(axis=1).mean())


def evaluate_regime(
    regime: Regime, generator: TrialGenerator, n_test: int, seed: SeedLike
) -> RegimeEvaluation:
    """Error rates and value of ``regime`` on ``n_test`` simulated patients.

    Patients follow the regime at every stage, so later-stage error rates are
    measured on the histories the regime itself produces.
    """
    outcome = generator.simulate(regime, n_test, seed)
    se = float(np.std(outcome.y, ddof=1) / np.sqrt(n_test)) if n_test > 1 else 0.0
    return RegimeEvaluation(
        error_rates=stage_error_rates(outcome.actions, outcome.optimal),
        total_error_rate=error_rate(outcome.actions, outcome.optimal),
        value=float(np.mean(outcome.y)),
        value_se=se,
    )


def value_estimate(
    regime: Regime, generator: TrialGenerator, n_test: int, seed: SeedLike
) -> tuple[float, float]:
    """Mean outcome under ``regime`` and its Monte-Carlo standard error."""
    evaluation = evaluate_regime(regime, generator, n_test, seed)
    return evaluation.value, evaluation.value_se


def selection_errors(
    supports: Sequence[Sequence[str]], signal: Sequence[Sequence[str]]
) -> tuple[int, int]:
    """Missed signal terms and selected noise terms, summed over stages."""
    false_negatives = 0
    false_positives = 0
    for selected, truth in zip(supports, signal, strict=True):
        false_negatives += len(set(truth) - set(selected))
        false_positives += len(set(selected) - set(truth))
    return false_negatives, false_positives


def _coefficient_summary(values: np.ndarray, truth: float) -> CoefficientSummary:
    mean = float(np.mean(values))
    return CoefficientSummary(
        truth=truth,
        mean=mean,
        bias=mean - truth,
        sd=float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
        rmse=float(np.sqrt(np.mean((values - truth) ** 2))),
    )


def summarize_method(
    method: str,
    results: Sequence[ReplicateResult],
    truth: Sequence[dict[str, float]],
    candidates: Sequence[Sequence[str]],
    n_signal: int,
    n_noise: int,
) -> MethodSummary:
    """Average the successful replicates of one method.

    Args:
        method: Method label.
        results: Every replicate of the method, failed ones included.
        truth: True blip coefficients per stage, keyed like
            :meth:`~dtr_engine.BlipModel.coefficient_map`.
        candidates: Blip term labels per stage.
        n_signal: Signal terms per replicate, all stages together.
        n_noise: Noise terms per replicate, all stages together.
    """
    ok = [result for result in results if result.ok]
    n_failed = len(results) - len(ok)
    if not ok:
        return MethodSummary(method=method, n_ok=0, n_failed=n_failed)

    selection_rates = tuple(
        {
            f"a:{label}": float(np.mean([label in r.supports[stage] for r in ok]))
            for label in labels
        }
        for stage, labels in enumerate(candidates)
    )
    fn = sum(r.false_negatives for r in ok)
    fp = sum(r.false_positives for r in ok)
    evaluations = [r.evaluation for r in ok if r.evaluation is not None]
    values = np.array([e.value for e in evaluations])

    coefficients = tuple(
        {
            key: _coefficient_summary(
                np.array([r.coefficients[stage][key] for r in ok]),
                stage_truth.get(key, 0.0),
            )
            for key in ok[0].coefficients[stage]
        }
        for stage, stage_truth in enumerate(truth)
    )
    return MethodSummary(
        method=method,
        n_ok=len(ok),
        n_failed=n_failed,
        selection_rates=selection_rates,
        fn_rate=fn / (len(ok) * n_signal) if n_signal else 0.0,
        fp_rate=fp / (len(ok) * n_noise) if n_noise else 0.0,
        error_rates=tuple(
            float(rate)
            for rate in np.mean([e.error_rates for e in evaluations], axis=0)
        ),
        total_error_rate=float(np.mean([e.total_error_rate for e in evaluations])),
        value=float(values.mean()),
        value_sd=float(values.std(ddof=1)) if values.size > 1 else 0.0,
        coefficients=coefficients,
    )


def summarize(
    config: ScenarioConfig,
    generator: TrialGenerator,
    results: Sequence[ReplicateResult],
) -> MetricsReport:
    """Aggregate replicate results in configuration order."""
    specs = generator.model_specs()
    candidates = tuple(tuple(term.label for term in spec.blip_terms) for spec in specs)
    signal = generator.signal_terms()
    n_signal = sum(len(terms) for terms in signal)
    n_noise = sum(len(labels) for labels in candidates) - n_signal
    truth = tuple(model.coefficient_map() for model in generator.true_stages())

    _, test_seed = config.seeds(0)
    oracle = evaluate_regime(
        generator.oracle_regime(), generator, config.n_test, test_seed
    )
    summaries = []
    for method in config.methods:
        summary = summarize_method(
            method.label,
            [r for r in results if r.method == method.label],
            truth,
            candidates,
            n_signal,
            n_noise,
        )
        if summary.n_failed:
            logger.warning(
                "%s: %d of %d replicates failed",
                method.label,
                summary.n_failed,
                summary.n_failed + summary.n_ok,
            )
        summaries.append(summary)
    return MetricsReport(
        config=config,
        oracle_value=oracle.value,
        methods=tuple(summaries),
        replicates=tuple(results),
    )
