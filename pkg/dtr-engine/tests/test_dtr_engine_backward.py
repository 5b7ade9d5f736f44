"""Tests for backward-recursive regime estimation, decisions and documents."""

import csv
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from dtr_engine import (
    EstimatorMethod,
    EstimatorSettings,
    Regime,
    RegimeFit,
    backward_fit,
    contrast,
    decide,
    decision_table,
    export_decisions_csv,
    export_regime_json,
    export_rows_csv,
    fit_regime,
    load_regime,
    recommend,
    stage_fit_rows,
)
from stage_data import (
    ConfigurationError,
    DataValidationError,
    ModelSpec,
    MultiStageTrial,
    StageRecord,
)

SETTINGS = EstimatorSettings(n_lambda=30, refit=True)


@pytest.fixture(scope="module")
def regime_fit(trial: MultiStageTrial, trial_specs: list[ModelSpec]) -> RegimeFit:
    """Refitted pdWOLS on the two-stage trial."""
    return fit_regime(trial, trial_specs, SETTINGS)


class TestBackwardFit:
    """Test the K-stage recursion."""

    def test_stage_two_blip(self, regime_fit: RegimeFit) -> None:
        """The last stage recovers a2 (1 - 1.5 x1) under confounding."""
        second = regime_fit.regime.stage(2)
        assert "x1" in second.support()
        assert second.psi0 == pytest.approx(1.0, abs=0.35)
        assert second.psi[0] == pytest.approx(-1.5, abs=0.35)

    def test_stage_one_tailoring(self, regime_fit: RegimeFit) -> None:
        """Stage 1 is tailored on x1 with a slope near -2."""
        first = regime_fit.regime.stage(1)
        assert "x1" in first.support()
        assert first.psi[0] == pytest.approx(-2.0, abs=0.5)

    def test_stage_two_decisions(
        self, regime_fit: RegimeFit, trial: MultiStageTrial
    ) -> None:
        """Stage-2 recommendations mostly agree with the true rule."""
        actions = recommend(regime_fit.regime, trial)
        assert actions.shape == (trial.n, 2)
        truth = (1.0 - 1.5 * trial.stages[1].covariates["x1"].to_numpy()) > 0
        assert np.mean(actions[:, 1] == truth) > 0.85

    def test_pseudo_outcome_dominance(
        self, regime_fit: RegimeFit, trial: MultiStageTrial
    ) -> None:
        """The stage-1 response is the final outcome plus stage-2 regret."""
        (outcome,) = regime_fit.pseudo_outcomes
        assert outcome.stage == 1
        assert np.all(outcome.values >= trial.y)

    def test_provenance(self, regime_fit: RegimeFit) -> None:
        """The tag records the method and both penalty levels."""
        tag = regime_fit.regime.tag
        assert tag.method is EstimatorMethod.PDWOLS
        assert tag.refit
        assert len(tag.lambdas) == 2
        assert [fit.stage for fit in regime_fit.stage_fits] == [1, 2]

    def test_q_learning_pseudo_outcome(
        self, trial: MultiStageTrial, trial_specs: list[ModelSpec]
    ) -> None:
        """Q-learning passes back the fitted treatment-free part plus the best blip."""
        settings = EstimatorSettings(method=EstimatorMethod.QLASSO, n_lambda=20)
        result = fit_regime(trial, trial_specs, settings)
        history = trial.history(2)
        last = result.stage_fit(2)
        c = contrast(last.model, history)
        expected = last.treatment_free(history) + np.maximum(c, 0.0)
        np.testing.assert_allclose(result.pseudo_outcomes[0].values, expected)
        assert result.regime.tag.method is EstimatorMethod.QLASSO

    def test_spec_count(self, trial: MultiStageTrial) -> None:
        """One spec per stage is required."""
        with pytest.raises(ConfigurationError, match="model specs"):
            backward_fit(trial, [ModelSpec(blip_terms=["x1"])], SETTINGS)


class TestDecisions:
    """Test applying regimes to patients."""

    def test_decide_single_stage(self, regime_fit: RegimeFit) -> None:
        """Stage-1 decisions need only stage-1 covariates."""
        regime = regime_fit.regime
        frame = {"x1": [-2.0, 2.0], "x2": [0.0, 0.0], "x3": [0.0, 0.0]}
        np.testing.assert_array_equal(decide(regime, frame), [1, 0])

    def test_decision_table(
        self, regime_fit: RegimeFit, trial: MultiStageTrial
    ) -> None:
        """The table carries received, contrast and recommended columns."""
        table = decision_table(regime_fit.regime, trial)
        assert list(table.columns) == [
            "id",
            "a_s1",
            "contrast_s1",
            "recommended_s1",
            "a_s2",
            "contrast_s2",
            "recommended_s2",
        ]
        assert table["id"].iloc[0] == "p0000"
        np.testing.assert_array_equal(
            table[["recommended_s1", "recommended_s2"]].to_numpy(),
            recommend(regime_fit.regime, trial),
        )

    def test_stage_mismatch(self, regime_fit: RegimeFit) -> None:
        """A regime only applies to trials with as many stages."""
        record = StageRecord(a=[1.0], covariates=pd.DataFrame({"x1": [0.0]}))
        single = MultiStageTrial(stages=(record,), y=np.zeros(1))
        with pytest.raises(DataValidationError, match="stages"):
            recommend(regime_fit.regime, single)


class TestRegimeDocuments:
    """Test regime JSON and CSV exports."""

    def test_dict_round_trip(self, regime_fit: RegimeFit) -> None:
        """A regime survives its JSON document unchanged."""
        regime = regime_fit.regime
        document = json.loads(json.dumps(regime.to_dict()))
        assert Regime.from_dict(document) == regime

    def test_file_round_trip(self, regime_fit: RegimeFit, tmp_path: Path) -> None:
        """Saved regimes load back and decide identically."""
        target = tmp_path / "regime.json"
        assert export_regime_json(regime_fit.regime, target)
        loaded = load_regime(target)
        assert loaded == regime_fit.regime

    def test_load_errors(self, tmp_path: Path) -> None:
        """Missing or malformed files raise DataValidationError."""
        with pytest.raises(DataValidationError):
            load_regime(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"stages": []}))
        with pytest.raises(DataValidationError, match="regime"):
            load_regime(bad)

    def test_decisions_csv(
        self, regime_fit: RegimeFit, trial: MultiStageTrial, tmp_path: Path
    ) -> None:
        """Decision rows keep full float precision."""
        table = decision_table(regime_fit.regime, trial)
        target = tmp_path / "decisions.csv"
        assert export_decisions_csv(table, target)
        with target.open(encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == trial.n
        assert float(rows[0]["contrast_s1"]) == table["contrast_s1"].iloc[0]

    def test_coefficient_rows(self, regime_fit: RegimeFit, tmp_path: Path) -> None:
        """Both stages report penalized and refitted coefficients."""
        rows = stage_fit_rows(regime_fit)
        versions = {(row["stage"], row["version"]) for row in rows}
        assert versions == {
            (1, "penalized"),
            (1, "refitted"),
            (2, "penalized"),
            (2, "refitted"),
        }
        assert export_rows_csv(rows, tmp_path / "coefficients.csv")
        assert not export_rows_csv([], tmp_path / "empty.csv")
        assert not export_rows_csv(rows, tmp_path / "missing" / "coefficients.csv")
