"""Tests for replicated experiments."""

import numpy as np
import pytest
from dtr_engine import EstimatorMethod, EstimatorSettings, WeightScheme, fit_regime
from pytest_mock import MockerFixture

from sim_harness import (
    ExperimentRunner,
    MetricsReport,
    OneStageGenerator,
    ScenarioConfig,
    penalized_regime,
    report_to_dict,
    run_experiment,
)
from stage_data import NumericalError


class TestExperimentRunner:
    """Test replicate execution and aggregation."""

    def test_report_shape(
        self, small_config: ScenarioConfig, small_report: MetricsReport
    ) -> None:
        """Every method is scored on every replicate."""
        assert [s.method for s in small_report.methods] == [
            m.label for m in small_config.methods
        ]
        assert len(small_report.replicates) == small_config.reps * 4
        assert small_report.n_failed == 0
        for summary in small_report.methods:
            assert summary.n_ok == small_config.reps
            assert 0.0 <= summary.total_error_rate <= 1.0
            assert 0.0 <= summary.fp_rate <= 1.0
            assert 0.0 <= summary.fn_rate <= 1.0
            assert np.isfinite(summary.value)
            assert set(summary.selection_rates[0]) == {
                "a:exp(x1)",
                *(f"a:x{j}" for j in range(1, 11)),
            }

    def test_oracle_dominates_on_shared_patients(
        self, small_report: MetricsReport
    ) -> None:
        """Replicate 0 shares its test patients with the oracle value."""
        for result in small_report.replicates:
            if result.replicate == 0:
                assert result.evaluation is not None
                assert result.evaluation.value <= small_report.oracle_value + 1e-12

    def test_variants_share_fit(self, small_report: MetricsReport) -> None:
        """The refitted regime keeps a subset of the penalized support."""
        by_key = {(r.replicate, r.method): r for r in small_report.replicates}
        for replicate in range(3):
            penalized = by_key[(replicate, "pdwols")]
            refitted = by_key[(replicate, "pdwols-refit")]
            assert penalized.lambdas == refitted.lambdas
            assert set(refitted.supports[0]) <= set(penalized.supports[0])

    def test_jobs_do_not_change_report(
        self, small_config: ScenarioConfig, small_report: MetricsReport
    ) -> None:
        """Parallel replicates aggregate to the same report."""
        parallel = run_experiment(small_config.model_copy(update={"n_jobs": 3}))
        expected = report_to_dict(small_report)
        actual = report_to_dict(parallel)
        expected["config"].pop("n_jobs")
        actual["config"].pop("n_jobs")
        assert actual == expected

    def test_progress_callback(self, small_config: ScenarioConfig) -> None:
        """Progress is reported once per replicate."""
        config = ScenarioConfig(
            **{**small_config.model_dump(), "methods": ["qlasso"], "reps": 2}
        )
        seen: list[int] = []
        ExperimentRunner(config).run(seen.append)
        assert sorted(seen) == [0, 1]

    def test_failures_are_recorded(
        self, small_config: ScenarioConfig, mocker: MockerFixture
    ) -> None:
        """Failed fits are counted per method, never dropped silently."""
        mocker.patch(
            "sim_harness.runner.fit_regime", side_effect=NumericalError("singular")
        )
        config = ScenarioConfig(**{**small_config.model_dump(), "reps": 2})
        report = run_experiment(config)
        assert report.n_failed == 2 * 4
        assert all(result.error == "singular" for result in report.replicates)
        assert report.summary("pdwols").value is None

    def test_settings(self) -> None:
        """Scenario weights apply to pdWOLS only; folds vary by replicate."""
        runner = ExperimentRunner(
            ScenarioConfig(scenario=3, base_seed=100, n_lambda=10)
        )
        pdwols = runner.settings(EstimatorMethod.PDWOLS, 2)
        qlasso = runner.settings(EstimatorMethod.QLASSO, 2)
        assert pdwols.weight_scheme is WeightScheme.ONES
        assert qlasso.weight_scheme is WeightScheme.ONES
        assert pdwols.seed == 102
        default = ExperimentRunner(ScenarioConfig(scenario=4))
        scheme = default.settings(EstimatorMethod.PDWOLS, 0).weight_scheme
        assert scheme is WeightScheme.ESTIMATE

    def test_two_stage_run(self) -> None:
        """Two-stage experiments report both stages."""
        config = ScenarioConfig(
            generator="two_stage_s1",
            n=300,
            p=4,
            reps=2,
            n_test=1000,
            n_lambda=10,
            methods=["pdwols-refit"],
        )
        report = run_experiment(config)
        summary = report.summary("pdwols-refit")
        assert summary.n_ok == 2
        assert len(summary.error_rates) == 2
        assert len(summary.selection_rates) == 2
        assert summary.total_error_rate >= max(summary.error_rates)
        with pytest.raises(KeyError):
            report.summary("qlasso")


class TestPenalizedRegime:
    """Test rebuilding the penalized regime from a refitted fit."""

    def test_penalized_coefficients(self) -> None:
        """Stages carry the penalized blip and a refit-free tag."""
        generator = OneStageGenerator(p=4)
        trial = generator.sample(300, seed=4).trial
        result = fit_regime(
            trial, generator.model_specs(), EstimatorSettings(n_lambda=10, refit=True)
        )
        regime = penalized_regime(result)
        penalized = result.stage_fit(1).penalized
        assert regime.stage(1).psi0 == pytest.approx(penalized.psi0)
        np.testing.assert_allclose(regime.stage(1).psi, penalized.psi)
        assert regime.stage(1).terms == result.regime.stage(1).terms
        assert not regime.tag.refit
        assert result.regime.tag.refit
