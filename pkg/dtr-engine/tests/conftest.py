"""Test configuration and fixtures for dtr-engine tests."""

import numpy as np
import pandas as pd
import pytest
from scipy.special import expit

from stage_data import ModelSpec, MultiStageTrial, StageDataset, StageRecord


def one_stage_data(n: int, seed: int) -> StageDataset:
    """Confounded single stage with blip ``a * (1 - 1.5 x1)``."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 4))
    a = rng.binomial(1, expit(0.5 * x[:, 0] - 0.5 * x[:, 1])).astype(float)
    y = (
        0.5
        - 2.0 * x[:, 0]
        + x[:, 1]
        + a * (1.0 - 1.5 * x[:, 0])
        + rng.normal(size=n)
    )
    frame = pd.DataFrame(x, columns=["x1", "x2", "x3", "x4"])
    return StageDataset(y=y, a=a, covariates=frame)


def two_stage_trial(n: int, seed: int) -> MultiStageTrial:
    """Two stages with blips ``a1 (0.8 - 2 x1)`` and ``a2 (1 - 1.5 x1)``."""
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=(n, 3))
    a1 = rng.binomial(1, expit(x1[:, 0] - x1[:, 1])).astype(float)
    x2 = 0.8 * x1 + rng.normal(size=(n, 3))
    x2[:, 0] += 0.5 * a1
    a2 = rng.binomial(1, expit(x2[:, 0] - x2[:, 1])).astype(float)

    contrast1 = 0.8 - 2.0 * x1[:, 0]
    contrast2 = 1.0 - 1.5 * x2[:, 0]
    regret1 = ((contrast1 > 0) - a1) * contrast1
    regret2 = ((contrast2 > 0) - a2) * contrast2
    y = 0.5 + 2.0 * x1[:, 0] + 2.0 * x1[:, 1] - regret1 - regret2
    y = y + rng.normal(size=n)

    names = ["x1", "x2", "x3"]
    stages = (
        StageRecord(a=a1, covariates=pd.DataFrame(x1, columns=names)),
        StageRecord(a=a2, covariates=pd.DataFrame(x2, columns=names)),
    )
    return MultiStageTrial(
        stages=stages, y=y, ids=tuple(f"p{i:04d}" for i in range(n))
    )


@pytest.fixture
def stage_data() -> StageDataset:
    """n=400 confounded single stage."""
    return one_stage_data(400, seed=3)


@pytest.fixture
def stage_spec() -> ModelSpec:
    """Linear treatment-free and blip terms with the true propensity terms."""
    names = ["x1", "x2", "x3", "x4"]
    return ModelSpec(
        treatment_free_terms=names, blip_terms=names, propensity_terms=["x1", "x2"]
    )


@pytest.fixture(scope="module")
def trial() -> MultiStageTrial:
    """n=1000 two-stage trial."""
    return two_stage_trial(1000, seed=8)


@pytest.fixture(scope="module")
def trial_specs() -> list[ModelSpec]:
    """Stage-wise specifications; stage 2 sees the stage-1 history."""
    names = ["x1", "x2", "x3"]
    first = ModelSpec(
        treatment_free_terms=names, blip_terms=names, propensity_terms=["x1", "x2"]
    )
    second = ModelSpec(
        treatment_free_terms=[*names, "x1_s1", "a_s1"],
        blip_terms=names,
        propensity_terms=["x1", "x2"],
    )
    return [first, second]
