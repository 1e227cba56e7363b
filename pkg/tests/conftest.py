import numpy as np
import pytest

from inertial_ch.model import Nonlinearity
from inertial_ch.spectral import DomainSpec


@pytest.fixture
def d1():
    return DomainSpec(1)


@pytest.fixture
def d2():
    return DomainSpec(2)


@pytest.fixture
def cubic():
    return Nonlinearity([0.0, -1.0, 0.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
