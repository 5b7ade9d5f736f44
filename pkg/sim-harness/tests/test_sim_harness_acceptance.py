"""Monte-Carlo acceptance runs on the reference simulation designs.

Each test runs 100 replicates; select them with ``pytest -m slow``.
"""

from typing import Any

import pytest

from sim_harness import MetricsReport, ScenarioConfig, run_experiment

pytestmark = pytest.mark.slow

NOISE_TERMS = [f"a:x{j}" for j in range(3, 11)]


def _run(**fields: Any) -> MetricsReport:
    return run_experiment(ScenarioConfig(reps=100, n_jobs=4, **fields))


class TestOneStageSelection:
    """Variable selection and error rates in the one-stage design."""

    def test_scenario_four(self) -> None:
        """Both models correct: x1 always kept, noise rarely."""
        report = _run(scenario=4, n=500, methods=["pdwols", "pdwols-refit"])
        rates = report.summary("pdwols").selection_rates[0]
        assert rates["a:x1"] >= 0.99
        assert all(rates[term] <= 0.15 for term in NOISE_TERMS)
        assert report.summary("pdwols-refit").total_error_rate <= 0.06

    def test_scenario_two(self) -> None:
        """Treatment model correct: pdWOLS beats Q-learning."""
        report = _run(scenario=2, n=500, methods=["pdwols", "qlasso"])
        pdwols = report.summary("pdwols").total_error_rate
        assert pdwols <= 0.07
        assert report.summary("qlasso").total_error_rate >= pdwols


class TestDoubleRobustness:
    """Refitted blip estimates are consistent when one nuisance model is right."""

    @pytest.mark.parametrize("scenario", [2, 3, 4])
    def test_refitted_bias(self, scenario: int) -> None:
        """Refitted pdWOLS psi1 is nearly unbiased at n=2000."""
        report = _run(
            scenario=scenario, n=2000, methods=["pdwols-refit", "qlasso-refit"]
        )
        bias = report.summary("pdwols-refit").coefficients[0]["a:x1"].bias
        assert abs(bias) <= 0.05
        if scenario == 3:
            qbias = report.summary("qlasso-refit").coefficients[0]["a:x1"].bias
            assert abs(qbias) <= 0.05

    def test_spread_shrinks(self) -> None:
        """The spread of refitted psi1 shrinks with the sample size."""
        spreads = [
            _run(scenario=4, n=n, methods=["pdwols-refit"])
            .summary("pdwols-refit")
            .coefficients[0]["a:x1"]
            .sd
            for n in (100, 500, 2000)
        ]
        assert spreads[2] < spreads[1] < spreads[0]


class TestHighDimensional:
    """p = 400 covariates with n = 200 patients."""

    def test_selection_and_error(self) -> None:
        """Few false negatives or positives; refit error rate below 14%."""
        report = _run(generator="high_dim", methods=["pdwols", "pdwols-refit"])
        pdwols = report.summary("pdwols")
        assert pdwols.fn_rate <= 0.02
        assert pdwols.fp_rate <= 0.01
        assert report.summary("pdwols-refit").total_error_rate <= 0.14


class TestTwoStage:
    """Two decisions with a misspecified treatment-free model."""

    @pytest.fixture(scope="class")
    def report(self) -> MetricsReport:
        """All four methods on n=1000."""
        return _run(generator="two_stage_s1", n=1000)

    def test_error_rates(self, report: MetricsReport) -> None:
        """pdWOLS errs rarely; Q-learning fails under misspecification."""
        assert report.summary("pdwols").total_error_rate <= 0.13
        assert report.summary("qlasso").total_error_rate >= 0.40

    def test_value(self, report: MetricsReport) -> None:
        """Refitted pdWOLS nearly reaches the oracle value of 0.5."""
        assert report.summary("pdwols-refit").value >= 0.4

    def test_selection(self, report: MetricsReport) -> None:
        """x1 is always selected at both stages; stage-2 noise rarely."""
        first, second = report.summary("pdwols").selection_rates
        assert first["a:x1"] == 1.0
        assert second["a:x1"] == 1.0
        assert all(second[term] <= 0.10 for term in NOISE_TERMS)
