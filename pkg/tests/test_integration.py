"""Integration tests for cross-module workflows."""

import csv
import os
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from dtr_engine import (
    BlipModel,
    EstimatorSettings,
    Regime,
    decide,
    fit_regime,
    load_regime,
)
from pdwols_cli.cli import cli
from pdwols_cli.settings import load_settings
from sim_harness import OneStageGenerator, TwoStageGenerator, evaluate_regime

CONFIG_DIR = Path(__file__).resolve().parents[1] / "config"


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """Drop PDWOLS_* variables of the host."""
    for key in list(os.environ):
        if key.startswith("PDWOLS_"):
            monkeypatch.delenv(key)


@pytest.mark.integration
@pytest.mark.parametrize("environment", ["development", "production", "test"])
def test_shipped_settings(environment: str) -> None:
    """Every shipped settings overlay validates."""
    settings = load_settings(environment=environment, config_dir=CONFIG_DIR)

    assert settings.estimator.alpha == 0.5
    assert settings.default_jobs >= 1


@pytest.mark.integration
def test_estimated_regime_beats_treating_everyone() -> None:
    """A regime fitted to simulated data errs less than a fixed rule."""
    generator = OneStageGenerator(scenario=4, p=6)
    trial = generator.sample(500, seed=21).trial
    result = fit_regime(
        trial, generator.model_specs(), EstimatorSettings(n_lambda=20, refit=True)
    )
    fitted = evaluate_regime(result.regime, generator, 5000, seed=99)

    first = result.regime.stage(1)
    treat_all = Regime(
        stages=(
            BlipModel(psi0=1.0, psi=(0.0,) * len(first.psi), terms=first.terms),
        ),
        tag=result.regime.tag,
    )
    fixed = evaluate_regime(treat_all, generator, 5000, seed=99)

    assert fitted.total_error_rate < 0.15
    assert fitted.total_error_rate < fixed.total_error_rate
    assert fitted.value > fixed.value


@pytest.mark.integration
def test_dtr_then_decide_at_stage_two(tmp_path: Path) -> None:
    """Saved regimes give the same stage-2 decisions as the fitting run."""
    trial = TwoStageGenerator(p=3).sample(300, seed=4).trial
    ids = [f"p{i:03d}" for i in range(trial.n)]
    paths = []
    for index, stage in enumerate(trial.stages, start=1):
        frame = stage.covariates.copy()
        frame.insert(0, "a", stage.a.astype(int))
        frame.insert(0, "id", ids)
        if index == 2:
            frame["y"] = trial.y
        paths.append(tmp_path / f"stage{index}.csv")
        frame.to_csv(paths[-1], index=False)
    spec = tmp_path / "stages.yaml"
    stage_spec = "  - {treatment_free_terms: [x1, x2, x3], blip_terms: [x1, x2, x3]}\n"
    spec.write_text("stages:\n" + stage_spec * 2, encoding="utf-8")

    history = trial.history(2)
    history.insert(0, "id", ids)
    patients = tmp_path / "history.csv"
    history.to_csv(patients, index=False)

    runner = CliRunner()
    fitted = runner.invoke(
        cli,
        ["dtr", *map(str, paths), "--id-column", "id", "--spec", str(spec)]
        + ["--out", str(tmp_path / "dtr"), "--n-lambda", "15", "--refit"],
    )
    assert fitted.exit_code == 0, fitted.output
    decided = runner.invoke(
        cli,
        ["decide", str(tmp_path / "dtr" / "regime.json"), str(patients)]
        + ["--stage", "2", "--id-column", "id", "--out", str(tmp_path / "new")],
    )
    assert decided.exit_code == 0, decided.output

    def column(path: Path, name: str) -> list[str]:
        with path.open(encoding="utf-8") as f:
            return [row[name] for row in csv.DictReader(f)]

    expected = column(tmp_path / "dtr" / "decisions.csv", "recommended_s2")
    assert column(tmp_path / "new" / "decisions.csv", "recommended_s2") == expected

    regime = load_regime(tmp_path / "dtr" / "regime.json")
    np.testing.assert_array_equal(
        decide(regime, history, stage=2), [int(v) for v in expected]
    )
