import numpy as np
import pytest

from cpaudit.data import Dataset
from cpaudit.rng import RngStream


@pytest.fixture
def rng():
    return RngStream(12345)


@pytest.fixture
def linear_data():
    """60-point 3-feature linear problem with mild noise."""
    g = np.random.default_rng(7)
    X = g.normal(size=(60, 3))
    y = 1.0 + X @ np.array([2.0, -1.0, 0.5]) + 0.1 * g.normal(size=60)
    return Dataset(X, y)


@pytest.fixture
def hetero_data():
    """1-D heteroscedastic fixture: quiet right half, noisy left half."""
    g = np.random.default_rng(3)
    X = np.linspace(-1, 1, 80).reshape(-1, 1)
    noise = np.where(X[:, 0] < 0, 2.0, 0.1) * g.normal(size=80)
    return Dataset(X, X[:, 0] + noise)
