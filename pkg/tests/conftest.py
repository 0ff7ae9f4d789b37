import numpy as np
import pytest

from wrenchgrasp.scenario import load_default_scenario


@pytest.fixture(scope="session")
def hammer_scenario():
    return load_default_scenario("hammer")


@pytest.fixture(scope="session")
def reach_scenario():
    return load_default_scenario("reach")


@pytest.fixture(scope="session")
def knock_scenario():
    return load_default_scenario("knock")


@pytest.fixture(scope="session")
def sweep_scenario():
    return load_default_scenario("sweep")


@pytest.fixture(scope="session")
def all_scenarios(hammer_scenario, sweep_scenario, knock_scenario, reach_scenario):
    return [hammer_scenario, sweep_scenario, knock_scenario, reach_scenario]


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])
