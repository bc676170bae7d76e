import numpy as np
import pytest

from vortexsym.evolution import make_initial_data
from vortexsym.grid import make_grid
from vortexsym.profile import make_canonical_profile
from vortexsym.spectral import default_w_index, spectral_density


@pytest.fixture(scope="session")
def profile():
    return make_canonical_profile(1.0)


@pytest.fixture(scope="session")
def grid():
    return make_grid()


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(-9.0, 9.0, 1025)


_TABLES = {}


@pytest.fixture(scope="session")
def table(profile, grid):
    """Cached density tables keyed by ``(k, stride)``."""

    def get(k, stride=4):
        key = (k, stride)
        if key not in _TABLES:
            data = make_initial_data(k, "basic", grid, profile)
            _TABLES[key] = spectral_density(k, data, profile, grid, w_index=default_w_index(grid, stride))
        return _TABLES[key]

    return get


@pytest.fixture(scope="session")
def data(profile, grid):
    cache = {}

    def get(k, shape="basic", sigma_k=0.0):
        key = (k, shape, sigma_k)
        if key not in cache:
            cache[key] = make_initial_data(k, shape, grid, profile, sigma_k)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
