"""Kernel functions over input vectors.

Inputs are given as an N x d array, one input per row. A one-dimensional array
is read as N scalar inputs.
"""

from enum import Enum
from typing import Optional

import numpy
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial.distance import cdist, pdist, squareform

from ..exceptions import DataError, DimensionError


class KernelFamily(str, Enum):
    """Kernel family:
    linear: k(x, z) = x^T z / gamma
    rbf: k(x, z) = exp(-|x - z|^2 / bandwidth) / gamma
    """

    linear = "linear"
    rbf = "rbf"


class KernelSpec(BaseModel):
    """Kernel family with amplitude 1/gamma and, for rbf, squared bandwidth"""

    model_config = ConfigDict(frozen=True)

    family: KernelFamily = Field(title="Kernel family")
    gamma: float = Field(
        title="Kernel precision",
        default=1.0,
        gt=0,
        description="The kernel amplitude is 1/gamma",
    )
    bandwidth: Optional[float] = Field(
        title="RBF bandwidth",
        default=None,
        gt=0,
        description="Squared length scale sigma^2, required for the rbf family",
    )

    @model_validator(mode="after")
    def check_bandwidth(self):
        if self.family == KernelFamily.rbf and self.bandwidth is None:
            raise ValueError("rbf kernel requires a bandwidth")
        return self

    @property
    def amplitude(self):
        return 1.0 / self.gamma

    def with_gamma(self, gamma):
        return self.model_copy(update={"gamma": float(gamma)})


def as_inputs(X):
    """Inputs as a 2-d float array with one row per input"""
    X = numpy.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionError(f"Inputs must be a vector or matrix, got shape {X.shape}")
    return X


def _as_point(x, dim):
    x = numpy.atleast_1d(numpy.asarray(x, dtype=float))
    if x.shape != (dim,):
        raise DimensionError(f"Input of shape {x.shape} does not match dimension {dim}")
    return x


def kernel_eval(spec, x, z):
    x = numpy.atleast_1d(numpy.asarray(x, dtype=float))
    z = _as_point(z, x.shape[0])
    if spec.family == KernelFamily.linear:
        return spec.amplitude * float(x @ z)
    return spec.amplitude * float(numpy.exp(-numpy.sum((x - z) ** 2) / spec.bandwidth))


def kernel_matrix(spec, X):
    """Gram matrix K(m, n) = k(x_m, x_n).

    Only the upper triangle is evaluated; the lower triangle is its mirror, so
    the result is exactly symmetric.

    Raises:
        DataError: no inputs given.
    """
    X = as_inputs(X)
    if X.shape[0] == 0:
        raise DataError("Kernel matrix of an empty input set")
    if spec.family == KernelFamily.linear:
        gram = X @ X.T
    else:
        gram = numpy.exp(-squareform(pdist(X, "sqeuclidean")) / spec.bandwidth)
    upper = numpy.triu(gram)
    return spec.amplitude * (upper + numpy.triu(gram, 1).T)


def cross_kernel(spec, X, x_new):
    """Vector k(x_new, x_n) over the training inputs"""
    X = as_inputs(X)
    x_new = _as_point(x_new, X.shape[1])
    if spec.family == KernelFamily.linear:
        return spec.amplitude * (X @ x_new)
    distances = cdist(X, x_new[None, :], "sqeuclidean")[:, 0]
    return spec.amplitude * numpy.exp(-distances / spec.bandwidth)


def cross_kernel_matrix(spec, X, X_new):
    """Q x N matrix of k(x_new_q, x_n)"""
    X = as_inputs(X)
    X_new = as_inputs(X_new)
    if X_new.shape[1] != X.shape[1]:
        raise DimensionError(
            f"Query inputs have dimension {X_new.shape[1]}, training inputs {X.shape[1]}"
        )
    if spec.family == KernelFamily.linear:
        return spec.amplitude * (X_new @ X.T)
    return spec.amplitude * numpy.exp(-cdist(X_new, X, "sqeuclidean") / spec.bandwidth)


def rbf_bandwidth_heuristic(X):
    """sigma^2 as the sum of squared distances over all ordered input pairs.

    Raises:
        DataError: fewer than two distinct inputs.
    """
    X = as_inputs(X)
    total = 2.0 * float(numpy.sum(pdist(X, "sqeuclidean"))) if X.shape[0] > 1 else 0.0
    if total <= 0:
        raise DataError("All inputs coincide, the rbf bandwidth would be zero")
    return total
