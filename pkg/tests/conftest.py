import numpy as np
import pytest

from fasris.analytic import analytic_setup
from fasris.params import default_params


@pytest.fixture(scope="session")
def params():
    return default_params()


@pytest.fixture(scope="session")
def setup(params):
    return analytic_setup(params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
