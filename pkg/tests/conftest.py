import functools
import math

import numpy as np
import pytest

from dtcsim.ed import DenseState, ed_evolve
from dtcsim.model import MagnetizationAxis, ModelParams, ProductStateSpec


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running physics checks (minutes)")


@functools.lru_cache(maxsize=None)
def ed_reference(N, JT, delta, dt_over_T, n_periods):
    """Exact series and final state from the all-+y product state (cached per session)."""
    params = ModelParams.from_epsilon(delta, 1.0, J=JT, lam=delta, N=N)
    spec = ProductStateSpec(0.0, 1, N)
    series, psi = ed_evolve(DenseState.from_product(spec), params, dt_over_T, n_periods,
                            MagnetizationAxis(0.0), return_state=True)
    return series, psi


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ideal_params():
    return ModelParams(h=math.pi, T=1.0)
