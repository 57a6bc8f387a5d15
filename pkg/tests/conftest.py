import numpy as np
import pytest

from rwmaximal.warp import Spacetime


def make(f, interval="(-inf,inf)", n=3, **params):
    return Spacetime.from_strings(f, interval, n, params)


@pytest.fixture
def gaussian():
    return make("exp(-t^2)")


@pytest.fixture
def minkowski():
    return make("1")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
