import pytest

from btpeval.population import generate_population
from btpeval.schemes import build_scheme


@pytest.fixture(scope="session")
def default_pop():
    return generate_population(7, 16, 0.03, seed=1)


@pytest.fixture(scope="session")
def fc_scheme():
    return build_scheme({"scheme": "fc", "code": {"n": 7, "k": 4, "t": 1}}, 7)


@pytest.fixture(scope="session")
def noiseless_pop():
    return generate_population(7, 16, 0.0, seed=1)
