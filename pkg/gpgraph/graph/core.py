import logging
import warnings
from functools import cached_property

import numpy
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.sparse.csgraph import connected_components

from ..arrays import Array, freeze
from ..exceptions import GraphError
from .spectral import eigendecompose

ASYMMETRY_RTOL = 1e-6

logger = logging.getLogger("gpgraph.graph")


class Graph(BaseModel):
    """Undirected weighted graph over M nodes.

    The adjacency is validated on construction and symmetrised as (A + A^T) / 2.
    The Laplacian and its spectrum are computed once and cached, so a graph can be
    shared freely between models.
    """

    model_config = ConfigDict(frozen=True)

    adjacency: Array = Field(
        title="Adjacency matrix",
        description="M x M nonnegative edge weights with zero diagonal",
    )

    @field_validator("adjacency")
    @classmethod
    def validate_adjacency(cls, value):
        if value.ndim != 2 or value.shape[0] != value.shape[1] or value.shape[0] == 0:
            raise GraphError(f"Adjacency must be a non-empty square matrix, got {value.shape}")
        if not numpy.all(numpy.isfinite(value)):
            raise GraphError("Adjacency contains non-finite entries")
        if numpy.any(value < 0):
            raise GraphError("Adjacency entries must be nonnegative")
        if numpy.any(numpy.diag(value) != 0):
            raise GraphError("Adjacency diagonal must be zero (no self loops)")
        scale = float(numpy.max(numpy.abs(value)))
        asymmetry = float(numpy.max(numpy.abs(value - value.T)))
        if asymmetry > ASYMMETRY_RTOL * scale:
            raise GraphError(
                f"Adjacency is not symmetric (max asymmetry {asymmetry:.3g}); use the directed operators"
            )
        if asymmetry > 0:
            warnings.warn(f"Adjacency symmetrised (max asymmetry {asymmetry:.3g})")
        return freeze((value + value.T) / 2)

    @classmethod
    def from_edges(cls, num_nodes, edges):
        """Build a graph from ``(i, j, weight)`` or ``(i, j)`` tuples with 0-based node ids"""
        adjacency = numpy.zeros((num_nodes, num_nodes))
        for edge in edges:
            i, j = int(edge[0]), int(edge[1])
            if not (0 <= i < num_nodes and 0 <= j < num_nodes):
                raise GraphError(f"Edge ({i}, {j}) outside 0..{num_nodes - 1}")
            weight = float(edge[2]) if len(edge) > 2 else 1.0
            adjacency[i, j] = adjacency[j, i] = weight
        return cls(adjacency=adjacency)

    @property
    def num_nodes(self):
        return self.adjacency.shape[0]

    @property
    def degrees(self):
        return self.adjacency.sum(axis=1)

    @cached_property
    def laplacian(self):
        return build_laplacian(self)

    @cached_property
    def spectrum(self):
        """:obj:`gpgraph.graph.GraphSpectrum` of the Laplacian"""
        logger.debug("Decomposing Laplacian of %d-node graph", self.num_nodes)
        return eigendecompose(self.laplacian)

    @cached_property
    def num_components(self):
        count, _ = connected_components(self.adjacency > 0, directed=False)
        return int(count)

    def subgraph(self, nodes):
        """Graph induced by the given node indices, in the given order"""
        nodes = numpy.asarray(nodes, dtype=int)
        return Graph(adjacency=self.adjacency[numpy.ix_(nodes, nodes)])

    def __str__(self):
        edges = int(numpy.count_nonzero(numpy.triu(self.adjacency)))
        return f"Graph with {self.num_nodes} nodes, {edges} edges, {self.num_components} components"


def build_laplacian(graph):
    """Combinatorial Laplacian L = D - A.

    Args:
        graph (:obj:`Graph`): validated undirected graph.

    Returns:
        numpy.ndarray: read-only M x M symmetric matrix with zero row sums.
    """
    adjacency = graph.adjacency
    laplacian = numpy.diag(adjacency.sum(axis=1)) - adjacency
    return freeze(laplacian)
