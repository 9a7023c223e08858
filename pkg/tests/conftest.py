import numpy as np
import pytest

from nads.config import bundled_systems, load_system


@pytest.fixture(scope="session")
def systems():
    return {name: load_system(f"bundled:{name}") for name in bundled_systems()}


@pytest.fixture(scope="session")
def doubling(systems):
    return systems["doubling"].sequence


@pytest.fixture(scope="session")
def identity(systems):
    return systems["identity"].sequence


@pytest.fixture(scope="session")
def f_system(systems):
    return systems["f-system"].sequence


@pytest.fixture(scope="session")
def g_system(systems):
    return systems["g-system"].sequence


@pytest.fixture(scope="session")
def shift8(systems):
    return systems["shift8"].sequence


@pytest.fixture(scope="session")
def scaled_tent(systems):
    return systems["scaled-tent"].sequence


def circle_dist(a, b):
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def sample_start(space, rng):
    """A start point whose short orbits stay inside the window of the bundled systems."""
    if space.kind == "vector":
        return rng.uniform(-1, 1, space.dimension)
    if space.kind == "real":
        return float(rng.uniform(-1, 1))
    return float(rng.uniform(0, 1))


np.set_printoptions(precision=17)
