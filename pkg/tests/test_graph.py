import os

import networkx
import numpy
import pytest

from gpgraph.exceptions import GraphError
from gpgraph.graph import Graph, SpectrumCache, build_laplacian, eigendecompose

from .utils import random_graph


def test_empty_graph_laplacian():
    graph = Graph(adjacency=numpy.zeros((3, 3)))
    assert numpy.array_equal(build_laplacian(graph), numpy.zeros((3, 3)))


def test_two_node_path_laplacian(two_node_path):
    assert numpy.array_equal(two_node_path.laplacian, [[1.0, -1.0], [-1.0, 1.0]])


def test_random_laplacian(graph8):
    laplacian = build_laplacian(graph8)
    assert numpy.all(numpy.abs(laplacian.sum(axis=1)) <= 1e-10 * numpy.linalg.norm(laplacian, 2))
    assert numpy.array_equal(laplacian, laplacian.T)
    adjacency = graph8.adjacency
    oracle = numpy.linalg.eigvalsh(numpy.diag(adjacency.sum(axis=1)) - adjacency)
    assert numpy.allclose(graph8.spectrum.eigenvalues, numpy.clip(oracle, 0, None), atol=1e-10)


def test_laplacian_read_only(graph8):
    with pytest.raises(ValueError):
        graph8.laplacian[0, 0] = 1.0


def test_single_node_graph():
    graph = Graph(adjacency=[[0.0]])
    assert graph.num_nodes == 1
    assert numpy.array_equal(graph.laplacian, [[0.0]])
    assert graph.spectrum.num_zero == 1


@pytest.mark.parametrize(
    "adjacency",
    [
        [[0.0, 1.0], [0.5, 0.0]],
        [[0.0, -1.0], [-1.0, 0.0]],
        [[1.0, 1.0], [1.0, 0.0]],
        [[0.0, numpy.nan], [numpy.nan, 0.0]],
        [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]],
        numpy.zeros((0, 0)),
    ],
)
def test_invalid_adjacency(adjacency):
    with pytest.raises(GraphError):
        Graph(adjacency=adjacency)


def test_roundoff_asymmetry_symmetrised():
    adjacency = numpy.array([[0.0, 1.0], [1.0 + 1e-9, 0.0]])
    with pytest.warns(UserWarning):
        graph = Graph(adjacency=adjacency)
    assert numpy.array_equal(graph.adjacency, graph.adjacency.T)
    assert graph.adjacency[0, 1] == pytest.approx(1.0 + 0.5e-9, rel=1e-15)


def test_from_edges_and_degrees():
    graph = Graph.from_edges(4, [(0, 1), (1, 2, 2.5)])
    assert numpy.array_equal(graph.degrees, [1.0, 3.5, 2.5, 0.0])
    assert graph.num_components == 2
    assert "4 nodes, 2 edges, 2 components" in str(graph)
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 2)])


def test_subgraph(graph8):
    sub = graph8.subgraph([2, 5, 7])
    assert sub.num_nodes == 3
    assert sub.adjacency[0, 1] == graph8.adjacency[2, 5]
    assert sub.adjacency[2, 0] == graph8.adjacency[7, 2]


def test_zero_eigenvalues_count_components(rng):
    for _ in range(50):
        m = int(rng.integers(2, 13))
        graph = random_graph(rng, m, connected=False, density=float(rng.uniform(0.05, 0.5)))
        count = networkx.number_connected_components(networkx.from_numpy_array(numpy.array(graph.adjacency)))
        assert graph.spectrum.num_zero == count
        assert graph.num_components == count


def test_spectrum_cache_roundtrip(tmp_path, graph8):
    cache = SpectrumCache(cache_timeout=600, cache_dir=str(tmp_path))
    first = cache.spectrum(graph8.laplacian)
    assert len(os.listdir(tmp_path)) == 1
    cached = cache.get(graph8.laplacian)
    assert cached is not None
    assert numpy.array_equal(cached.eigenvalues, first.eigenvalues)
    assert numpy.array_equal(cached.basis, first.basis)


def test_spectrum_cache_rejects_stale_entry(tmp_path, graph8, k4):
    cache = SpectrumCache(cache_timeout=600, cache_dir=str(tmp_path))
    other = eigendecompose(2 * graph8.laplacian)
    cache.put(graph8.laplacian, other)
    with pytest.warns(UserWarning):
        assert cache.get(graph8.laplacian) is None
    assert os.listdir(tmp_path) == []
    assert cache.get(k4.laplacian) is None


def test_spectrum_cache_timeout(tmp_path, graph8):
    cache = SpectrumCache(cache_timeout=-1, cache_dir=str(tmp_path))
    cache.put(graph8.laplacian, graph8.spectrum)
    assert cache.get(graph8.laplacian) is None
    assert os.listdir(tmp_path) == []
