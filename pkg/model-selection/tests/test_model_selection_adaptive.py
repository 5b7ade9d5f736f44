"""Tests for adaptive penalty factors."""

from collections.abc import Callable

import numpy as np
import pandas as pd
import pytest

from heredity_solver import PenaltyMode
from model_selection import (
    FACTOR_CAP,
    PilotKind,
    adaptive_factors,
    factors_from_pilot,
    pilot_fit,
)
from stage_data import (
    ConfigurationError,
    DesignBlocks,
    ModelSpec,
    NumericalError,
    StageDataset,
    build_design,
    prepare_blocks,
    prepare_design,
)

RawInstance = tuple[DesignBlocks, np.ndarray, np.ndarray]
RawFactory = Callable[..., RawInstance]


def _exact_linear(n: int = 20) -> tuple[DesignBlocks, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(2)
    x1 = rng.normal(size=n)
    a = np.tile([0.0, 1.0], n // 2)
    y = 3.0 + a - 2.0 * x1 - 1.5 * a * x1
    data = StageDataset(y=y, a=a, covariates=pd.DataFrame({"x1": x1}))
    w = rng.uniform(0.5, 1.0, size=n)
    spec = ModelSpec(treatment_free_terms=["x1"], blip_terms=["x1"])
    blocks, yc = prepare_design(data, spec, w, scale=False)
    return blocks, yc, w


class TestFactorsFromPilot:
    """Test the plug-in arithmetic."""

    def test_plug_in_values(self) -> None:
        """psi0=1, beta=-2, psi=-1.5 gives 1, 0.5 and 4/3."""
        factors = factors_from_pilot(
            1.0, np.array([-2.0]), np.array([-1.5]), np.array([0])
        )
        assert factors.psi0 == pytest.approx(1.0)
        np.testing.assert_allclose(factors.main, [0.5])
        np.testing.assert_allclose(factors.tau, [4.0 / 3.0])
        np.testing.assert_allclose(factors.psi, [1.0 / 1.5])

    def test_zero_coefficient_capped(self) -> None:
        """A zero pilot coefficient maps to the cap."""
        factors = factors_from_pilot(
            0.0, np.array([0.0, 1.0]), np.array([0.0]), np.array([1])
        )
        assert factors.psi0 == FACTOR_CAP
        assert factors.main[0] == FACTOR_CAP
        assert factors.tau[0] == FACTOR_CAP
        assert factors.psi[0] == FACTOR_CAP

    def test_main_factors_layout(self) -> None:
        """psi0 stays unpenalized unless requested."""
        factors = factors_from_pilot(
            0.5, np.array([1.0, -4.0]), np.array([2.0]), np.array([0])
        )
        np.testing.assert_allclose(factors.main_factors(), [0.0, 1.0, 0.25])
        np.testing.assert_allclose(factors.main_factors(True), [2.0, 1.0, 0.25])
        spec = factors.penalty(0.1, 0.5, PenaltyMode.PLAIN)
        np.testing.assert_allclose(spec.interaction_factors, [0.5])
        assert spec.mode is PenaltyMode.PLAIN


class TestAdaptiveFactors:
    """Test pilot fits on designs."""

    def test_exact_recovery(self) -> None:
        """An exactly linear response reproduces the plug-in factors."""
        blocks, yc, w = _exact_linear()
        factors = adaptive_factors(blocks, yc, w, PilotKind.WLS)
        assert factors.pilot is PilotKind.WLS
        assert factors.psi0 == pytest.approx(1.0, rel=1e-8)
        np.testing.assert_allclose(factors.main, [0.5], rtol=1e-8)
        np.testing.assert_allclose(factors.tau, [4.0 / 3.0], rtol=1e-8)

    def test_rank_deficient_wls(self) -> None:
        """A duplicated covariate breaks the WLS pilot."""
        rng = np.random.default_rng(0)
        x1 = rng.normal(size=30)
        a = np.tile([0.0, 1.0], 15)
        data = StageDataset(
            y=x1 + a + rng.normal(size=30),
            a=a,
            covariates=pd.DataFrame({"x1": x1, "x2": x1}),
        )
        spec = ModelSpec(treatment_free_terms=["x1", "x2"], blip_terms=["x1"])
        w = np.ones(30)
        blocks, yc = prepare_design(data, spec, w)
        with pytest.raises(NumericalError, match="rank deficient"):
            adaptive_factors(blocks, yc, w, PilotKind.WLS)

        factors = adaptive_factors(blocks, yc, w, PilotKind.AUTO)
        assert factors.pilot is PilotKind.RIDGE
        assert factors.pilot_penalty > 0
        assert np.all(np.isfinite(factors.main))

    def test_ridge_penalty_validated(self, raw_instance: RawInstance) -> None:
        """Explicit ridge penalties must be positive."""
        blocks, y, w = raw_instance
        prepared, yc = prepare_blocks(blocks, y, w)
        with pytest.raises(ConfigurationError, match="ridge_penalty"):
            pilot_fit(prepared, yc, w, PilotKind.RIDGE, ridge_penalty=0.0)

    def test_requires_centering(self, raw_instance: RawInstance) -> None:
        """Raw blocks are rejected."""
        blocks, y, w = raw_instance
        with pytest.raises(ConfigurationError, match="centered"):
            adaptive_factors(blocks, y, w)

    def test_row_order_invariance(self, raw_instance: RawInstance) -> None:
        """Permuting rows leaves the factors unchanged."""
        blocks, y, w = raw_instance
        order = np.random.default_rng(9).permutation(blocks.n)
        prepared, yc = prepare_blocks(blocks, y, w)
        shuffled, yc_shuffled = prepare_blocks(blocks.take(order), y[order], w[order])
        first = adaptive_factors(prepared, yc, w)
        second = adaptive_factors(shuffled, yc_shuffled, w[order])
        assert second.psi0 == pytest.approx(first.psi0, rel=1e-8)
        np.testing.assert_allclose(second.main, first.main, rtol=1e-8)
        np.testing.assert_allclose(second.tau, first.tau, rtol=1e-8)

    def test_signal_interaction_has_smallest_factor(self, make_raw: RawFactory) -> None:
        """With ample data the true interaction gets the lightest plain-mode factor."""
        blocks, y, w = make_raw(500, 5, seed=1)
        prepared, yc = prepare_blocks(blocks, y, w)
        factors = adaptive_factors(prepared, yc, w)
        assert factors.psi[0] < factors.psi[1:].min()


class TestDesignMetadata:
    """Factors follow the blip-to-main mapping."""

    def test_blip_only_term(self) -> None:
        """A blip term absent from the main list still gets a parent factor."""
        rng = np.random.default_rng(4)
        frame = pd.DataFrame({"x1": rng.normal(size=40), "x2": rng.normal(size=40)})
        a = np.tile([0.0, 1.0], 20)
        data = StageDataset(y=rng.normal(size=40), a=a, covariates=frame)
        spec = ModelSpec(treatment_free_terms=["x1"], blip_terms=["x2"])
        raw = build_design(data, spec)
        prepared, yc = prepare_blocks(raw, data.y, np.ones(40))
        factors = adaptive_factors(prepared, yc, np.ones(40))
        assert factors.main.shape == (2,)
        assert factors.tau.shape == (1,)
