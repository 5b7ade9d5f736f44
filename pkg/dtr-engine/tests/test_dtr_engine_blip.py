"""Tests for blip, decision-rule, regret and pseudo-outcome evaluation."""

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from dtr_engine import (
    BlipModel,
    EstimatorMethod,
    blip_value,
    contrast,
    optimal_action,
    pseudo_outcome,
    regret,
)
from stage_data import ConfigurationError, DataValidationError

LINEAR = BlipModel(psi0=1.0, psi=(-1.5,), terms=("x1",))


def _frame(*x1: float) -> pd.DataFrame:
    return pd.DataFrame({"x1": list(x1), "x2": [0.0] * len(x1)})


class TestBlipValue:
    """Test ``a * (psi0 + psi' x)``."""

    def test_reference_treatment(self) -> None:
        """a = 0 gives a zero blip for any history."""
        values = blip_value(LINEAR, _frame(-3.0, 0.0, 5.0), 0)
        np.testing.assert_array_equal(values, [0.0, 0.0, 0.0])

    def test_treated(self) -> None:
        """psi0=1, psi1=-1.5, x1=1, a=1 gives -0.5."""
        assert blip_value(LINEAR, {"x1": 1.0}, 1)[0] == pytest.approx(-0.5)

    def test_boundary(self) -> None:
        """x1 = 2/3 sits on the decision boundary."""
        assert blip_value(LINEAR, {"x1": 2.0 / 3.0}, 1)[0] == pytest.approx(
            0.0, abs=1e-12
        )

    def test_vector_treatments(self) -> None:
        """Treatments broadcast row by row."""
        values = blip_value(LINEAR, _frame(0.0, 0.0), np.array([1, 0]))
        np.testing.assert_array_equal(values, [1.0, 0.0])

    def test_non_binary_treatment(self) -> None:
        """Treatments other than 0/1 are rejected."""
        with pytest.raises(DataValidationError, match="0 or 1"):
            blip_value(LINEAR, {"x1": 0.0}, 2)

    def test_unknown_column(self) -> None:
        """Unresolvable terms raise."""
        with pytest.raises(DataValidationError, match="unknown column"):
            contrast(LINEAR, {"x9": 1.0})

    def test_transformed_terms(self) -> None:
        """Compact term strings are parsed and evaluated."""
        model = BlipModel(psi0=0.0, psi=(1.0, 2.0), terms=["exp(x1)", "log|x2|"])
        value = contrast(model, {"x1": 0.0, "x2": np.e})
        assert value[0] == pytest.approx(3.0)


class TestOptimalAction:
    """Test the strict-inequality decision rule."""

    def test_sign_of_contrast(self) -> None:
        """x1=1 leads to 0, x1=0 leads to 1."""
        np.testing.assert_array_equal(optimal_action(LINEAR, _frame(1.0, 0.0)), [0, 1])

    def test_exact_tie_maps_to_reference(self) -> None:
        """A contrast of exactly zero recommends a=0."""
        model = BlipModel(psi0=1.0, psi=(-0.5,), terms=("x1",))
        assert contrast(model, {"x1": 2.0})[0] == 0.0
        assert optimal_action(model, {"x1": 2.0})[0] == 0

    def test_positive_rescaling(self) -> None:
        """Multiplying every coefficient by c > 0 keeps the rule."""
        rng = np.random.default_rng(0)
        frame = pd.DataFrame({"x1": rng.normal(size=200), "x2": rng.normal(size=200)})
        model = BlipModel(psi0=0.3, psi=(-1.0, 0.7), terms=("x1", "x2"))
        for factor in (1e-6, 0.5, 3.0, 1e6):
            np.testing.assert_array_equal(
                optimal_action(model.scaled(factor), frame),
                optimal_action(model, frame),
            )


class TestRegret:
    """Test regret values."""

    def test_zero_at_optimum(self) -> None:
        """Following the rule costs nothing."""
        frame = _frame(-1.0, 0.2, 0.9, 3.0)
        best = optimal_action(LINEAR, frame)
        np.testing.assert_array_equal(regret(LINEAR, frame, best), np.zeros(4))

    def test_suboptimal_action(self) -> None:
        """x1=1 (optimum 0) treated with a=1 has regret 0.5."""
        assert regret(LINEAR, {"x1": 1.0}, 1)[0] == pytest.approx(0.5)

    def test_identity(self) -> None:
        """regret(h, 1) + regret(h, 0) equals the absolute contrast."""
        frame = _frame(*np.linspace(-2.0, 2.0, 21))
        total = regret(LINEAR, frame, 1) + regret(LINEAR, frame, 0)
        np.testing.assert_allclose(total, np.abs(contrast(LINEAR, frame)))

    def test_nonnegative(self) -> None:
        """Regret is never negative."""
        rng = np.random.default_rng(1)
        frame = _frame(*rng.normal(size=100))
        actions = rng.integers(0, 2, size=100)
        assert np.all(regret(LINEAR, frame, actions) >= 0.0)


class TestPseudoOutcome:
    """Test responses handed to earlier stages."""

    def test_regret_added(self) -> None:
        """pdWOLS adds the downstream regret."""
        result = pseudo_outcome(np.array([2.0, 2.0]), LINEAR, _frame(1.0, 0.0), [1, 1])
        np.testing.assert_allclose(result.values, [2.5, 2.0])

    def test_optimal_unchanged(self) -> None:
        """Patients observed at their optimum keep their response."""
        frame = _frame(-1.0, 0.5, 2.0)
        y = np.array([0.3, -1.2, 4.0])
        result = pseudo_outcome(y, LINEAR, frame, optimal_action(LINEAR, frame))
        np.testing.assert_array_equal(result.values, y)

    def test_dominance(self) -> None:
        """Pseudo-outcomes are never below the response."""
        rng = np.random.default_rng(2)
        frame = _frame(*rng.normal(size=50))
        y = rng.normal(size=50)
        result = pseudo_outcome(y, LINEAR, frame, rng.integers(0, 2, size=50), stage=1)
        assert result.stage == 1
        assert result.n == 50
        assert np.all(result.values >= y)

    def test_q_learning_form(self) -> None:
        """Q-learning uses the treatment-free fit plus the optimal blip."""
        fitted = np.array([1.0, 1.0])
        result = pseudo_outcome(
            np.array([9.0, 9.0]),
            LINEAR,
            _frame(1.0, 0.0),
            [1, 1],
            method=EstimatorMethod.QLASSO,
            treatment_free=fitted,
        )
        np.testing.assert_allclose(result.values, [1.0, 2.0])

    def test_q_learning_needs_treatment_free(self) -> None:
        """The Q-learning form cannot be built without fitted values."""
        with pytest.raises(ConfigurationError, match="treatment_free"):
            pseudo_outcome(
                np.zeros(1), LINEAR, _frame(0.0), [0], method=EstimatorMethod.QLASSO
            )

    def test_length_mismatch(self) -> None:
        """Response and history must align."""
        with pytest.raises(DataValidationError, match="rows"):
            pseudo_outcome(np.zeros(3), LINEAR, _frame(0.0), [0])


class TestBlipModel:
    """Test blip model validation."""

    def test_length_mismatch(self) -> None:
        """One coefficient per term."""
        with pytest.raises(ValidationError):
            BlipModel(psi0=1.0, psi=(1.0, 2.0), terms=("x1",))

    def test_non_finite(self) -> None:
        """Coefficients must be finite."""
        with pytest.raises(ValidationError):
            BlipModel(psi0=float("nan"))

    def test_support_and_map(self) -> None:
        """Support lists nonzero tailoring terms."""
        model = BlipModel(psi0=0.5, psi=(0.0, -2.0), terms=("x1", "x2"))
        assert model.support() == ("x2",)
        assert model.coefficient_map() == {"a": 0.5, "a:x1": 0.0, "a:x2": -2.0}
