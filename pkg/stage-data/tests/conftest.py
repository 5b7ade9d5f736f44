"""Test configuration and fixtures for stage-data tests."""

import numpy as np
import pandas as pd
import pytest

from stage_data import ModelSpec, StageDataset


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator."""
    return np.random.default_rng(20240501)


@pytest.fixture
def random_stage(rng: np.random.Generator) -> StageDataset:
    """A 40-row stage with three covariates and a random treatment."""
    x = rng.normal(size=(40, 3))
    a = rng.integers(0, 2, size=40).astype(float)
    y = 1.0 + x[:, 0] - 0.5 * x[:, 1] + a * (1.0 - 1.5 * x[:, 0]) + rng.normal(size=40)
    covariates = pd.DataFrame(x, columns=["x1", "x2", "x3"])
    return StageDataset(y=y, a=a, covariates=covariates)


@pytest.fixture
def linear_spec() -> ModelSpec:
    """All covariates as main effects and blip terms."""
    names = ["x1", "x2", "x3"]
    return ModelSpec(treatment_free_terms=names, blip_terms=names)
