import numpy as np
import pytest

from src.boundary_sets import CantorSpec, cantor_build
from src.config import Config


@pytest.fixture
def small_config():
    """Config with shallow sets and low degrees for fast tests."""
    return Config(series_degree=20, cantor_depth=12, kset_max_level=10, psi_k_max=30,
                  multiplier_samples=500, outer_nodes=2 ** 12)


@pytest.fixture
def middle_thirds():
    return CantorSpec(1.0 / 3.0, 12)


@pytest.fixture
def middle_thirds_set(middle_thirds):
    return cantor_build(middle_thirds)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
