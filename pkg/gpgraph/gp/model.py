"""Gaussian process regression for vector targets on a graph.

Targets form an N x M matrix T whose columns are node series. They are
vectorized column by column, t = vec(T), so the prior covariance of t is
C = B^2 (x) K + I / beta with the graph factor on the left.

With L = V diag(lambda) V^T, K = U diag(theta) U^T and s = (1 + alpha J^2)^-2,
C has eigenvectors v_k (x) u_i and eigenvalues s_k theta_i + 1/beta. Fitting
stores eta = 1 / (s theta + 1/beta) and rho = V^T T^T U, both M x N, and every
prediction is assembled from those without forming C.
"""

import logging
import os
import warnings
from typing import List, Optional

import numpy
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from ..arrays import Array, freeze, vec
from ..exceptions import (
    DataError,
    DecompositionError,
    DimensionError,
    FactorizationError,
    OracleCapError,
    ParameterError,
)
from ..graph import (
    GraphSpectrum,
    SmoothingOperator,
    SpectralPenalty,
    make_penalty,
    make_smoothing_operator,
)
from .kernels import (
    KernelSpec,
    as_inputs,
    cross_kernel,
    cross_kernel_matrix,
    kernel_eval,
    kernel_matrix,
)

ORACLE_CAP = int(os.environ.get("GPGRAPH_ORACLE_CAP", 2000))
JITTER = 1e-10

logger = logging.getLogger("gpgraph.gp")


class PredictiveDistribution(BaseModel):
    """Gaussian posterior N(mean, covariance) of the target vector at one new input"""

    model_config = ConfigDict(frozen=True)

    mean: Array = Field(title="Predictive mean", description="Length M")
    covariance: Array = Field(
        title="Predictive covariance", description="M x M symmetric positive semidefinite"
    )

    @property
    def variance(self):
        return numpy.diag(self.covariance).copy()

    @property
    def trace(self):
        return float(numpy.trace(self.covariance))


class GpgModel(BaseModel):
    """Frozen training state of a graph Gaussian process"""

    model_config = ConfigDict(frozen=True)

    inputs: Array = Field(title="Training inputs X", description="N x d")
    targets: Array = Field(title="Training targets T", description="N x M, row n is t_n")
    smoothing: SmoothingOperator = Field(title="Smoothing operator B")
    kernel: KernelSpec = Field(title="Kernel")
    beta: float = Field(title="Noise precision", gt=0)
    kernel_basis: Array = Field(title="Kernel eigenvectors U", description="N x N")
    kernel_eigenvalues: Array = Field(title="Kernel eigenvalues theta", description="Length N, >= 0")
    eta: Array = Field(
        title="Inverse covariance eigenvalues",
        description="M x N, eta[k, i] = 1 / (s_k theta_i + 1/beta)",
    )
    rho: Array = Field(
        title="Target coefficients",
        description="M x N, rho[k, i] = (v_k (x) u_i)^T vec(T)",
    )
    spectrum: Optional[GraphSpectrum] = Field(title="Graph spectrum", default=None)
    penalty: Optional[SpectralPenalty] = Field(title="Spectral penalty", default=None)

    @property
    def num_inputs(self):
        return self.targets.shape[0]

    @property
    def num_nodes(self):
        return self.targets.shape[1]

    @property
    def alpha(self):
        return self.smoothing.alpha

    @property
    def vec_targets(self):
        return vec(self.targets)


def _check_training(X, T, num_nodes, beta):
    X = as_inputs(X)
    T = numpy.asarray(T, dtype=float)
    if T.ndim == 1 and num_nodes == 1:
        T = T[:, None]
    if T.ndim != 2 or T.shape[1] != num_nodes:
        raise DimensionError(
            f"Targets of shape {T.shape} do not match a graph with {num_nodes} nodes"
        )
    if T.shape[0] == 0:
        raise DataError("At least one training pair is required")
    if X.shape[0] != T.shape[0]:
        raise DimensionError(f"{X.shape[0]} inputs but {T.shape[0]} target rows")
    if not (numpy.all(numpy.isfinite(X)) and numpy.all(numpy.isfinite(T))):
        raise DataError("Training data contain non-finite values")
    if not (numpy.isfinite(beta) and beta > 0):
        raise ParameterError(f"beta must be a positive finite number, got {beta}")
    return X, T


def fit_operator(X, T, smoothing, kernel, beta, spectrum=None, penalty=None):
    """Fit a model for an arbitrary smoothing operator, directed graphs included.

    Args:
        X: N x d training inputs.
        T: N x M training targets.
        smoothing (:obj:`SmoothingOperator`): the operator B.
        kernel (:obj:`KernelSpec`): input kernel.
        beta (float): noise precision.
        spectrum (:obj:`GraphSpectrum`, optional): kept on the model for reference.
        penalty (:obj:`SpectralPenalty`, optional): kept on the model for reference.

    Returns:
        :obj:`GpgModel`
    """
    X, T = _check_training(X, T, smoothing.num_nodes, beta)
    gram = kernel_matrix(kernel, X)
    try:
        theta, U = scipy.linalg.eigh(gram)
    except (numpy.linalg.LinAlgError, ValueError) as e:
        raise DecompositionError(f"Kernel eigendecomposition failed: {e}") from e
    theta = numpy.clip(theta, 0.0, None)
    s = smoothing.factors**2
    eta = 1.0 / (s[:, None] * theta[None, :] + 1.0 / beta)
    rho = smoothing.basis.T @ T.T @ U
    logger.debug(
        "Fitted model with N=%d inputs, M=%d nodes, alpha=%g", T.shape[0], T.shape[1], smoothing.alpha
    )
    return GpgModel(
        inputs=X,
        targets=T,
        smoothing=smoothing,
        kernel=kernel,
        beta=beta,
        kernel_basis=U,
        kernel_eigenvalues=theta,
        eta=eta,
        rho=rho,
        spectrum=spectrum,
        penalty=penalty,
    )


def fit(X, T, spectrum, penalty, kernel, alpha, beta):
    """Fit a graph Gaussian process.

    Args:
        X: N x d training inputs (a vector is read as N scalar inputs).
        T: N x M training targets, one row per input.
        spectrum (:obj:`GraphSpectrum`): Laplacian spectrum of the graph.
        penalty (:obj:`SpectralPenalty`): spectral penalty, None for the Laplacian profile.
        kernel (:obj:`KernelSpec`): input kernel.
        alpha (float): graph regularization, >= 0.
        beta (float): noise precision, > 0.

    Returns:
        :obj:`GpgModel`

    Raises:
        DimensionError: targets do not match the graph or the inputs.
        DataError: non-finite data.
        ParameterError: negative alpha or non-positive beta.
    """
    if penalty is None:
        penalty = make_penalty(spectrum)
    smoothing = make_smoothing_operator(penalty, alpha)
    return fit_operator(X, T, smoothing, kernel, beta, spectrum=spectrum, penalty=penalty)


def _query(model, x_new):
    k = cross_kernel(model.kernel, model.inputs, x_new)
    kappa = kernel_eval(model.kernel, x_new, x_new)
    return k, kappa


def mean_spectrum(model, x_new):
    """Graph Fourier coefficients of the predictive mean.

    The coefficient along v_k is s_k sum_i eta[k, i] rho[k, i] (u_i^T k), where k
    is the cross-kernel vector of ``x_new``.
    """
    k, _ = _query(model, x_new)
    w = model.kernel_basis.T @ k
    return model.smoothing.factors**2 * ((model.eta * model.rho) @ w)


def predict(model, x_new):
    """Predictive distribution at ``x_new`` through the spectral factors.

    Returns:
        :obj:`PredictiveDistribution`

    Raises:
        DimensionError: ``x_new`` does not match the training input dimension.
    """
    k, kappa = _query(model, x_new)
    w = model.kernel_basis.T @ k
    s = model.smoothing.factors**2
    basis = model.smoothing.basis
    mean = basis @ (s * ((model.eta * model.rho) @ w))
    spectral_var = kappa * s - s**2 * (model.eta @ w**2)
    covariance = (basis * spectral_var) @ basis.T + numpy.eye(model.num_nodes) / model.beta
    return PredictiveDistribution(mean=mean, covariance=(covariance + covariance.T) / 2)


def predict_batch(model, X_new):
    """One :obj:`PredictiveDistribution` per row of ``X_new``; no joint posterior"""
    X_new = numpy.asarray(X_new, dtype=float)
    if X_new.ndim == 1:
        X_new = X_new[:, None] if model.inputs.shape[1] == 1 else X_new[None, :]
    return [predict(model, x) for x in X_new]


def predict_mean(model, X_new):
    """Predictive means for many query inputs at once, returned as a Q x M array"""
    X_new = as_inputs(X_new)
    W = cross_kernel_matrix(model.kernel, model.inputs, X_new) @ model.kernel_basis
    coeffs = (W @ (model.eta * model.rho).T) * model.smoothing.factors**2
    return coeffs @ model.smoothing.basis.T


def _cholesky(matrix):
    try:
        return scipy.linalg.cho_factor(matrix, lower=True)
    except numpy.linalg.LinAlgError:
        jitter = JITTER * float(numpy.mean(numpy.diag(matrix)))
        warnings.warn(f"Cholesky factorization failed, retrying with jitter {jitter:.3g}")
    try:
        return scipy.linalg.cho_factor(matrix + jitter * numpy.eye(matrix.shape[0]), lower=True)
    except numpy.linalg.LinAlgError as e:
        raise FactorizationError(f"Cholesky factorization failed after jitter: {e}") from e


def predict_naive(model, x_new, cap=None):
    """Dense reference evaluation of the predictive distribution.

    Builds C = B^2 (x) K + I/beta, D = B^2 (x) k and F = k(x, x) B^2 + I/beta and
    solves with a Cholesky factorization.

    Args:
        model (:obj:`GpgModel`): fitted model.
        x_new: query input.
        cap (int, optional): largest allowed M N, defaults to ``GPGRAPH_ORACLE_CAP``.

    Raises:
        OracleCapError: M N exceeds the cap.
        FactorizationError: C could not be factorized even with jitter.
    """
    cap = ORACLE_CAP if cap is None else cap
    size = model.num_nodes * model.num_inputs
    if size > cap:
        raise OracleCapError(f"Dense oracle needs M*N={size} > cap {cap}")
    k, kappa = _query(model, x_new)
    b2 = model.smoothing.b_squared
    gram = kernel_matrix(model.kernel, model.inputs)
    noise = 1.0 / model.beta
    C = numpy.kron(b2, gram) + noise * numpy.eye(size)
    D = numpy.kron(b2, k[:, None])
    F = kappa * b2 + noise * numpy.eye(model.num_nodes)
    factor = _cholesky(C)
    mean = D.T @ scipy.linalg.cho_solve(factor, model.vec_targets)
    covariance = F - D.T @ scipy.linalg.cho_solve(factor, D)
    return PredictiveDistribution(mean=mean, covariance=(covariance + covariance.T) / 2)


def predict_conventional(X, T, kernel, beta, x_new):
    """Independent scalar GPs per node sharing one kernel matrix.

    Returns:
        :obj:`PredictiveDistribution` whose covariance is a multiple of the identity.
    """
    T = numpy.asarray(T, dtype=float)
    num_nodes = T.shape[1] if T.ndim == 2 else 1
    X, T = _check_training(X, T, num_nodes, beta)
    gram = kernel_matrix(kernel, X)
    k = cross_kernel(kernel, X, x_new)
    kappa = kernel_eval(kernel, x_new, x_new)
    factor = _cholesky(gram + numpy.eye(X.shape[0]) / beta)
    mean = k @ scipy.linalg.cho_solve(factor, T)
    variance = kappa + 1.0 / beta - float(k @ scipy.linalg.cho_solve(factor, k))
    return PredictiveDistribution(mean=mean, covariance=variance * numpy.eye(num_nodes))


def marginal_trace(model):
    """tr(C) = sum over (k, i) of s_k theta_i + 1/beta"""
    return float(numpy.sum(1.0 / model.eta))


def conventional_marginal_trace(model):
    """tr(I_M (x) K + I/beta) = M tr(K) + M N / beta for the same training data"""
    m, n = model.num_nodes, model.num_inputs
    return float(m * numpy.sum(model.kernel_eigenvalues) + m * n / model.beta)


def shrinkage_factors(model):
    """Attenuation of each (v_k, u_i) component of the fitted training mean.

    beta theta_i / (beta theta_i + (1 + alpha J_k^2)^2), an M x N array; at
    alpha = 0 every row equals the conventional factor beta theta / (beta theta + 1).
    """
    growth = model.smoothing.growth
    bt = model.beta * model.kernel_eigenvalues
    return bt[None, :] / (bt[None, :] + growth[:, None] ** 2)


def predictive_trace_pair(X, T, graph, penalty, kernel, alpha, beta, x_new):
    """Predictive covariance traces of the conventional and the graph model.

    Returns:
        tuple: (trace conventional, trace graph) for the same data and query.
    """
    conventional = predict_conventional(X, T, kernel, beta, x_new)
    model = fit(X, T, graph.spectrum, penalty, kernel, alpha, beta)
    return conventional.trace, predict(model, x_new).trace
