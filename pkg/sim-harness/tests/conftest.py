"""Test configuration and fixtures for sim-harness tests."""

import pytest

from sim_harness import MetricsReport, ScenarioConfig, run_experiment


@pytest.fixture(scope="session")
def small_config() -> ScenarioConfig:
    """Three quick replicates of scenario 4."""
    return ScenarioConfig(
        generator="one_stage",
        scenario=4,
        n=200,
        reps=3,
        n_test=2000,
        n_lambda=15,
        base_seed=11,
    )


@pytest.fixture(scope="session")
def small_report(small_config: ScenarioConfig) -> MetricsReport:
    """Report of :func:`small_config` run on one worker."""
    return run_experiment(small_config)
