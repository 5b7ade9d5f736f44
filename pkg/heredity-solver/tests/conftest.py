"""Test configuration and fixtures for heredity-solver tests."""

from collections.abc import Callable

import numpy as np
import pandas as pd
import pytest

from stage_data import DesignBlocks, ModelSpec, StageDataset, prepare_design

Instance = tuple[DesignBlocks, np.ndarray, np.ndarray]


def build_instance(
    n: int,
    p: int,
    seed: int,
    unit_weights: bool = False,
    scale: bool = True,
) -> Instance:
    """Random stage with a heredity-respecting truth, prepared for the solver."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    a = rng.integers(0, 2, size=n).astype(float)
    a[:2] = [0.0, 1.0]
    beta = np.zeros(p)
    beta[: min(p, 2)] = [1.0, -0.8][: min(p, 2)]
    psi = np.zeros(p)
    psi[0] = -1.2
    y = 0.5 + x @ beta + a * (1.0 + x @ psi) + 0.5 * rng.normal(size=n)
    names = [f"x{j + 1}" for j in range(p)]
    data = StageDataset(y=y, a=a, covariates=pd.DataFrame(x, columns=names))
    spec = ModelSpec(treatment_free_terms=names, blip_terms=names)
    w = np.ones(n) if unit_weights else rng.uniform(0.2, 1.0, size=n)
    blocks, y_centered = prepare_design(data, spec, w, scale=scale)
    return blocks, y_centered, w


@pytest.fixture
def make_instance() -> Callable[..., Instance]:
    """Factory for random solver instances."""
    return build_instance


@pytest.fixture
def small_instance() -> Instance:
    """n=50, p=5 instance with random weights."""
    return build_instance(50, 5, seed=3)
