import logging
from typing import Optional

import fsspec
import numpy
from pydantic import BaseModel, Field, ValidationError, model_validator

from .. import __version__
from ..arrays import Array
from ..exceptions import DataError, DimensionError
from ..graph import (
    Graph,
    ProfileSpec,
    SpectrumCache,
    directed_smoothing_operator,
    make_penalty,
)
from ..gp import KernelSpec, fit, fit_operator
from .data import Standardization

logger = logging.getLogger("gpgraph.experiment")


class ModelArtifact(BaseModel):
    """Everything needed to refit a model deterministically.

    Spectral factors are not stored; :meth:`build` recomputes them.
    """

    version: str = Field(title="gpgraph version", default=__version__)
    inputs: Array = Field(title="Training inputs", description="N x d, after standardization")
    targets: Array = Field(title="Training targets", description="N x M")
    adjacency: Array = Field(title="Adjacency matrix", description="M x M")
    directed: bool = Field(
        title="Directed graph",
        default=False,
        description="Use the (I - A)^T (I - A) penalty of the normalized adjacency",
    )
    profile: ProfileSpec = Field(title="Spectral penalty profile", default=ProfileSpec())
    alpha: float = Field(title="Graph regularization", ge=0)
    beta: float = Field(title="Noise precision", gt=0)
    kernel: KernelSpec = Field(title="Kernel")
    standardization: Optional[Standardization] = Field(
        title="Input standardization",
        default=None,
        description="Applied to query inputs before prediction",
    )

    @model_validator(mode="after")
    def check_shapes(self):
        if self.inputs.ndim != 2 or self.targets.ndim != 2:
            raise DimensionError("Artifact inputs and targets must be matrices")
        if self.adjacency.shape != (self.targets.shape[1],) * 2:
            raise DimensionError(
                f"Adjacency {self.adjacency.shape} does not match {self.targets.shape[1]} target columns"
            )
        return self

    def build(self, cache_timeout=0):
        """Refit the :obj:`gpgraph.gp.GpgModel`.

        Args:
            cache_timeout (int): seconds to keep the Laplacian spectrum in the
                on-disk cache, 0 to bypass the cache.
        """
        if self.directed:
            smoothing = directed_smoothing_operator(self.adjacency, self.alpha)
            return fit_operator(self.inputs, self.targets, smoothing, self.kernel, self.beta)
        graph = Graph(adjacency=self.adjacency)
        if cache_timeout > 0:
            spectrum = SpectrumCache(cache_timeout=cache_timeout).spectrum(graph.laplacian)
        else:
            spectrum = graph.spectrum
        penalty = make_penalty(spectrum, self.profile)
        return fit(self.inputs, self.targets, spectrum, penalty, self.kernel, self.alpha, self.beta)

    def prepare_inputs(self, X):
        """Query inputs in the representation the model was trained on"""
        if self.standardization is not None:
            return self.standardization.apply(X)
        X = numpy.asarray(X, dtype=float)
        return X[:, None] if X.ndim == 1 else X

    def save(self, path):
        with fsspec.open(path, "w") as f:
            f.write(self.model_dump_json(indent=2))
        logger.debug("Model artifact written to %s", path)

    @classmethod
    def load(cls, path):
        try:
            with fsspec.open(path, "r") as f:
                content = f.read()
        except FileNotFoundError as e:
            raise DataError(f"Model file not found: {path}") from e
        try:
            return cls.model_validate_json(content)
        except ValidationError as e:
            raise DataError(f"Invalid model file {path}: {e}") from e
