import numpy as np
import pytest

from processing.flow_models import cat_model
from processing.time_change import Bump, CoboundaryTerm, TimeChange, TimeChangeSpec

BUMP_SPEC = TimeChangeSpec(1.0, (Bump(0.3, (1, 0)),))
CONSTANT_SPEC = TimeChangeSpec(1.0)
COBOUNDARY_SPEC = TimeChangeSpec(1.0, coboundary=(CoboundaryTerm(0.1, (1, 0)),))


@pytest.fixture(scope='session')
def model():
    return cat_model


@pytest.fixture(scope='session')
def bump_tc():
    return TimeChange(BUMP_SPEC)


@pytest.fixture(scope='session')
def constant_tc():
    return TimeChange(CONSTANT_SPEC)


@pytest.fixture(scope='session')
def coboundary_tc():
    return TimeChange(COBOUNDARY_SPEC)


@pytest.fixture
def rng():
    return np.random.default_rng(1)
