import numpy as np
import pytest

from rolloutid.experiments import newton_system, unstable_3x3


@pytest.fixture
def newton():
    return newton_system(0.2)


@pytest.fixture
def unstable():
    return unstable_3x3()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
