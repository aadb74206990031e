import numpy
import pytest

from .utils import complete_graph, path_graph, random_graph


@pytest.fixture
def rng():
    return numpy.random.default_rng(20240611)


@pytest.fixture
def two_node_path():
    return path_graph(2)


@pytest.fixture
def k4():
    return complete_graph(4)


@pytest.fixture
def graph8(rng):
    return random_graph(rng, 8)
