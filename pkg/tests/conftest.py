import numpy as np
import pytest

from euler_lab import Grid3
from euler_lab.ic import random_band_limited, taylor_green


@pytest.fixture(scope="session")
def g16():
    return Grid3(16)


@pytest.fixture(scope="session")
def g32():
    return Grid3(32)


@pytest.fixture(scope="session")
def g64():
    return Grid3(64)


@pytest.fixture(scope="session")
def tg32(g32):
    return taylor_green(g32)


@pytest.fixture(scope="session")
def tg64(g64):
    return taylor_green(g64)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260817)


@pytest.fixture(scope="session")
def rand32():
    return random_band_limited(Grid3(32), seed=7, k_min=2, k_max=8)
