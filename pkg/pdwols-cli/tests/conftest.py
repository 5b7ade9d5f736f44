"""Test configuration and fixtures for pdwols-cli tests."""

import os
from pathlib import Path

import pandas as pd
import pytest
from click.testing import CliRunner

from sim_harness import OneStageGenerator, TwoStageGenerator
from stage_data import MultiStageTrial

SCENARIO_FOUR_SPEC = """\
treatment_free_terms = ["exp(x1)", "x1", "x2", "x3", "x4"]
blip_terms = ["exp(x1)", "x1", "x2", "x3", "x4"]
propensity_terms = ["x1", "x2"]
"""

TWO_STAGE_SPEC = """\
stages:
  - treatment_free_terms: [x1, x2, x3]
    blip_terms: [x1, x2, x3]
    propensity_terms: [x1, x2, x3]
  - treatment_free_terms: [x1, x2, x3]
    blip_terms: [x1, x2, x3]
    propensity_terms: [x1, x2, x3]
"""


def _patient_ids(n: int) -> list[str]:
    return [f"p{i:03d}" for i in range(n)]


@pytest.fixture(autouse=True)
def isolated_settings(
    monkeypatch: pytest.MonkeyPatch, tmp_path_factory: pytest.TempPathFactory
) -> None:
    """Ignore PDWOLS_* variables and settings files of the host."""
    for key in list(os.environ):
        if key.startswith("PDWOLS_"):
            monkeypatch.delenv(key)
    empty = tmp_path_factory.mktemp("settings")
    monkeypatch.setenv("PDWOLS_CONFIG_DIR", str(empty))


@pytest.fixture
def runner() -> CliRunner:
    """Click test runner."""
    return CliRunner()


@pytest.fixture(scope="session")
def one_stage_trial() -> MultiStageTrial:
    """Scenario-4 sample with four covariates."""
    return OneStageGenerator(scenario=4, p=4).sample(300, seed=5).trial


@pytest.fixture(scope="session")
def two_stage_trial() -> MultiStageTrial:
    """Two-stage sample with three covariates per stage."""
    return TwoStageGenerator(p=3).sample(300, seed=8).trial


@pytest.fixture
def one_stage_csv(one_stage_trial: MultiStageTrial, tmp_path: Path) -> Path:
    """One-stage data file with y, a and covariate columns."""
    stage = one_stage_trial.stages[0]
    frame = stage.covariates.copy()
    frame.insert(0, "a", stage.a.astype(int))
    frame.insert(0, "y", one_stage_trial.y)
    path = tmp_path / "scenario4.csv"
    frame.to_csv(path, index=False)
    return path


@pytest.fixture
def one_stage_spec(tmp_path: Path) -> Path:
    """Scenario-4 analysis model in TOML."""
    path = tmp_path / "scenario4.toml"
    path.write_text(SCENARIO_FOUR_SPEC, encoding="utf-8")
    return path


@pytest.fixture
def stage_csvs(two_stage_trial: MultiStageTrial, tmp_path: Path) -> list[Path]:
    """One file per stage keyed by patient id; the outcome is in the last."""
    paths = []
    for index, stage in enumerate(two_stage_trial.stages, start=1):
        frame = stage.covariates.copy()
        frame.insert(0, "a", stage.a.astype(int))
        frame.insert(0, "id", _patient_ids(two_stage_trial.n))
        if index == two_stage_trial.n_stages:
            frame["y"] = two_stage_trial.y
        path = tmp_path / f"stage{index}.csv"
        frame.to_csv(path, index=False)
        paths.append(path)
    return paths


@pytest.fixture
def long_csv(two_stage_trial: MultiStageTrial, tmp_path: Path) -> Path:
    """The two-stage sample with one row per patient and stage."""
    frames = []
    for index, stage in enumerate(two_stage_trial.stages, start=1):
        frame = stage.covariates.copy()
        frame.insert(0, "a", stage.a.astype(int))
        frame.insert(0, "stage", index)
        frame.insert(0, "id", _patient_ids(two_stage_trial.n))
        if index == two_stage_trial.n_stages:
            frame["y"] = two_stage_trial.y
        frames.append(frame)
    path = tmp_path / "long.csv"
    pd.concat(frames, ignore_index=True).to_csv(path, index=False)
    return path


@pytest.fixture
def two_stage_spec(tmp_path: Path) -> Path:
    """Two-stage analysis model in YAML."""
    path = tmp_path / "two_stage.yaml"
    path.write_text(TWO_STAGE_SPEC, encoding="utf-8")
    return path
