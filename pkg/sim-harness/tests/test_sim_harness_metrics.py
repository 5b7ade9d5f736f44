"""Tests for regime metrics and their aggregation."""

import numpy as np
import pytest

from sim_harness import (
    OneStageGenerator,
    RegimeEvaluation,
    ReplicateResult,
    error_rate,
    selection_errors,
    stage_error_rates,
    summarize_method,
    value_estimate,
)

TRUTH = ({"a": 1.0, "a:x1": -1.5},)
CANDIDATES = (("x1", "x2", "x3"),)


def _result(
    replicate: int, support: tuple[str, ...], psi1: float, value: float
) -> ReplicateResult:
    fn, fp = selection_errors((support,), (("x1",),))
    return ReplicateResult(
        replicate=replicate,
        method="pdwols",
        supports=(support,),
        coefficients=({"a": 1.0, "a:x1": psi1, "a:x2": 0.0, "a:x3": 0.0},),
        lambdas=(0.1,),
        evaluation=RegimeEvaluation(
            error_rates=(0.1 * replicate,),
            total_error_rate=0.1 * replicate,
            value=value,
            value_se=0.01,
        ),
        false_negatives=fn,
        false_positives=fp,
    )


class TestErrorRates:
    """Test disagreement with the optimal actions."""

    def test_stage_and_total(self) -> None:
        """Total error counts patients wrong at any stage."""
        actions = np.array([[1, 0], [1, 1], [0, 0]])
        optimal = np.array([[1, 1], [1, 1], [1, 0]])
        assert stage_error_rates(actions, optimal) == pytest.approx((1 / 3, 1 / 3))
        assert error_rate(actions, optimal) == pytest.approx(2 / 3)

    def test_single_stage_vectors(self) -> None:
        """One-dimensional actions are one stage."""
        assert error_rate(np.array([1, 0, 1, 1]), np.array([1, 1, 1, 1])) == 0.25


class TestValueEstimate:
    """Test Monte-Carlo value estimates."""

    def test_standard_error(self) -> None:
        """The standard error shrinks like 1/sqrt(n)."""
        generator = OneStageGenerator()
        regime = generator.oracle_regime()
        _, small = value_estimate(regime, generator, 1000, seed=0)
        _, large = value_estimate(regime, generator, 16_000, seed=0)
        assert large < small
        assert small / large == pytest.approx(4.0, rel=0.2)


class TestSelection:
    """Test false negative and false positive counts."""

    def test_counts(self) -> None:
        """Missed signal and selected noise are counted separately."""
        assert selection_errors((("x1", "x3"),), (("x1",),)) == (0, 1)
        assert selection_errors(((),), (("x1",),)) == (1, 0)
        assert selection_errors((("x2",), ("x1",)), (("x1",), ("x1",))) == (1, 1)


class TestSummarizeMethod:
    """Test aggregation over replicates."""

    def test_summary(self) -> None:
        """Rates, values and coefficient summaries over successful replicates."""
        results = [
            _result(0, ("x1",), -1.4, 0.5),
            _result(1, ("x1", "x3"), -1.6, 0.3),
            ReplicateResult(replicate=2, method="pdwols", error="singular"),
        ]
        summary = summarize_method(
            "pdwols", results, TRUTH, CANDIDATES, n_signal=1, n_noise=2
        )
        assert (summary.n_ok, summary.n_failed) == (2, 1)
        assert summary.selection_rates == (
            {"a:x1": 1.0, "a:x2": 0.0, "a:x3": 0.5},
        )
        assert summary.fn_rate == 0.0
        assert summary.fp_rate == pytest.approx(0.25)
        assert summary.error_rates == pytest.approx((0.05,))
        assert summary.value == pytest.approx(0.4)
        assert summary.value_sd == pytest.approx(np.std([0.5, 0.3], ddof=1))

        psi1 = summary.coefficients[0]["a:x1"]
        assert psi1.truth == -1.5
        assert psi1.bias == pytest.approx(0.0, abs=1e-12)
        assert psi1.rmse == pytest.approx(0.1)
        assert summary.coefficients[0]["a:x2"].truth == 0.0

    def test_all_failed(self) -> None:
        """Methods without a successful replicate report no metrics."""
        results = [ReplicateResult(replicate=0, method="qlasso", error="boom")]
        summary = summarize_method("qlasso", results, TRUTH, CANDIDATES, 1, 2)
        assert (summary.n_ok, summary.n_failed) == (0, 1)
        assert summary.value is None
        assert summary.selection_rates == ()
