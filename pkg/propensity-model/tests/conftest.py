"""Test configuration and fixtures for propensity-model tests."""

import numpy as np
import pytest


@pytest.fixture
def rng_probabilities() -> np.ndarray:
    """Fifty probabilities strictly inside (0, 1)."""
    return np.random.default_rng(11).uniform(0.05, 0.95, size=50)
