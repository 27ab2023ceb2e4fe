import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ftcs.lattices import KINDS, generate, syndrome_graph

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(params=KINDS)
def kind(request) -> str:
    return request.param


@pytest.fixture(scope="session")
def cubic2():
    return generate(("cubic", 2))


@pytest.fixture(scope="session")
def cubic2_graph():
    return syndrome_graph("cubic", 2)


@pytest.fixture(scope="session")
def cubic4_graph():
    return syndrome_graph("cubic", 4)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
