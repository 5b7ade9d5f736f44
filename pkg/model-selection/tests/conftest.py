"""Test configuration and fixtures for model-selection tests."""

from collections.abc import Callable

import numpy as np
import pandas as pd
import pytest

from stage_data import DesignBlocks, ModelSpec, StageDataset, build_design

RawInstance = tuple[DesignBlocks, np.ndarray, np.ndarray]


def build_raw_instance(n: int, p: int, seed: int) -> RawInstance:
    """Raw design with a single true interaction on x1 and random weights."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    a = rng.integers(0, 2, size=n).astype(float)
    a[:4] = [0.0, 1.0, 0.0, 1.0]
    beta = np.zeros(p)
    beta[: min(p, 2)] = [1.0, -0.8][: min(p, 2)]
    psi = np.zeros(p)
    psi[0] = -1.2
    y = 0.5 + x @ beta + a * (1.0 + x @ psi) + 0.5 * rng.normal(size=n)
    names = [f"x{j + 1}" for j in range(p)]
    data = StageDataset(y=y, a=a, covariates=pd.DataFrame(x, columns=names))
    blocks = build_design(data, ModelSpec(treatment_free_terms=names, blip_terms=names))
    return blocks, y, rng.uniform(0.2, 1.0, size=n)


@pytest.fixture
def make_raw() -> Callable[..., RawInstance]:
    """Factory for raw instances."""
    return build_raw_instance


@pytest.fixture
def raw_instance() -> RawInstance:
    """n=60, p=3 raw instance."""
    return build_raw_instance(60, 3, seed=11)
