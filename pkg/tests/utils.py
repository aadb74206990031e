import numpy

from gpgraph.graph import Graph


def relerr(a, b):
    """Relative Frobenius error of ``a`` against ``b``"""
    a = numpy.asarray(a, dtype=float)
    b = numpy.asarray(b, dtype=float)
    scale = max(numpy.linalg.norm(b), numpy.finfo(float).tiny)
    return float(numpy.linalg.norm(a - b) / scale)


def random_graph(rng, m, connected=True, density=0.4):
    """Random weighted graph, a spanning path guarantees connectivity"""
    weights = rng.uniform(0.1, 1.0, size=(m, m))
    mask = rng.uniform(size=(m, m)) < density
    adjacency = numpy.triu(weights * mask, 1)
    if connected:
        for i in range(m - 1):
            adjacency[i, i + 1] = max(adjacency[i, i + 1], rng.uniform(0.1, 1.0))
    return Graph(adjacency=adjacency + adjacency.T)


def path_graph(m):
    return Graph.from_edges(m, [(i, i + 1) for i in range(m - 1)])


def complete_graph(m):
    return Graph(adjacency=numpy.ones((m, m)) - numpy.eye(m))


def empty_graph(m):
    return Graph(adjacency=numpy.zeros((m, m)))
