"""Graph spectra, graph Fourier transforms and spectral penalties.

The Laplacian eigendecomposition L = V diag(lambda) V^T is the single source of
spectral truth. A penalty G = V diag(J^2) V^T promotes or suppresses individual
graph frequencies, and the smoothing operator B = (I + alpha G)^-1 is always
formed from (V, J) rather than by inverting a dense matrix.
"""

import logging
from enum import Enum
from functools import cached_property
from typing import List, Optional

import numpy
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..arrays import Array, freeze, vec
from ..exceptions import (
    DecompositionError,
    DimensionError,
    DomainError,
    NormalizationError,
    ParameterError,
)

ZERO_RTOL = 1e-8
KRONECKER_RTOL = 1e-10

logger = logging.getLogger("gpgraph.graph")


def _square(matrix, name="matrix"):
    matrix = numpy.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {matrix.shape}")
    return matrix


def _symmetrize(matrix):
    return (matrix + matrix.T) / 2


class GraphSpectrum(BaseModel):
    """Orthonormal eigenbasis and ascending nonnegative eigenvalues of a Laplacian"""

    model_config = ConfigDict(frozen=True)

    basis: Array = Field(
        title="Eigenvector basis V",
        description="M x M orthogonal matrix, one eigenvector per column",
    )
    eigenvalues: Array = Field(
        title="Eigenvalues",
        description="Length M, sorted ascending, nonnegative",
    )

    @model_validator(mode="after")
    def check_shapes(self):
        m = self.eigenvalues.shape[0]
        if self.eigenvalues.ndim != 1 or self.basis.shape != (m, m):
            raise DimensionError(
                f"Basis {self.basis.shape} does not match {m} eigenvalues"
            )
        return self

    @property
    def num_nodes(self):
        return self.eigenvalues.shape[0]

    @property
    def zero_threshold(self):
        """Eigenvalues at or below this are treated as zero"""
        return ZERO_RTOL * max(float(self.eigenvalues[-1]), 0.0)

    @property
    def num_zero(self):
        """Number of zero eigenvalues; the number of connected components for a Laplacian"""
        return int(numpy.sum(self.eigenvalues <= self.zero_threshold))


def _fix_signs(basis):
    # Largest-magnitude entry of each eigenvector is made positive
    rows = numpy.argmax(numpy.abs(basis), axis=0)
    signs = numpy.sign(basis[rows, numpy.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def eigendecompose(laplacian):
    """Eigendecomposition of a symmetric positive semidefinite matrix.

    Args:
        laplacian: M x M symmetric matrix, symmetrised before decomposition.

    Returns:
        :obj:`GraphSpectrum`: eigenvalues ascending with roundoff negatives
        clamped to zero, eigenvectors orthonormal with a deterministic sign.

    Raises:
        DecompositionError: the eigensolver failed or the matrix is indefinite.
    """
    matrix = _symmetrize(_square(laplacian, "Laplacian"))
    try:
        eigenvalues, basis = scipy.linalg.eigh(matrix)
    except (numpy.linalg.LinAlgError, ValueError) as e:
        raise DecompositionError(f"Eigendecomposition failed: {e}") from e
    threshold = ZERO_RTOL * max(float(eigenvalues[-1]), 0.0)
    if eigenvalues[0] < -threshold:
        raise DecompositionError(
            f"Matrix is not positive semidefinite (smallest eigenvalue {eigenvalues[0]:.6g})"
        )
    eigenvalues = numpy.where(eigenvalues < 0, 0.0, eigenvalues)
    return GraphSpectrum(basis=_fix_signs(basis), eigenvalues=eigenvalues)


def gft(spectrum, x):
    """Graph Fourier transform x_hat = V^T x (x may hold one signal per column)"""
    x = numpy.asarray(x, dtype=float)
    if x.shape[0] != spectrum.num_nodes:
        raise DimensionError(
            f"Signal has {x.shape[0]} entries, graph has {spectrum.num_nodes} nodes"
        )
    return spectrum.basis.T @ x


def igft(spectrum, xhat):
    """Inverse graph Fourier transform x = V x_hat"""
    xhat = numpy.asarray(xhat, dtype=float)
    if xhat.shape[0] != spectrum.num_nodes:
        raise DimensionError(
            f"Coefficient vector has {xhat.shape[0]} entries, graph has {spectrum.num_nodes} nodes"
        )
    return spectrum.basis @ xhat


def smoothness(laplacian, y):
    """Rayleigh quotient y^T L y / y^T y; small for signals varying little across edges.

    Raises:
        DomainError: ``y`` is the zero vector.
    """
    laplacian = _square(laplacian, "Laplacian")
    y = numpy.asarray(y, dtype=float)
    if y.shape != (laplacian.shape[0],):
        raise DimensionError(
            f"Signal shape {y.shape} does not match Laplacian {laplacian.shape}"
        )
    energy = float(y @ y)
    if energy == 0:
        raise DomainError("Smoothness is undefined for the zero signal")
    return max(float(y @ laplacian @ y) / energy, 0.0)


class ProfileKind(str, Enum):
    """Spectral penalty profile:
    laplacian: J(i) = sqrt(lambda_i), i.e. G = L (lowpass / smooth signals)
    custom: J given explicitly, one nonnegative weight per graph frequency
    band_select: J(i) = 0 on the selected frequencies and ``weight`` elsewhere
    """

    laplacian = "laplacian"
    custom = "custom"
    band_select = "band_select"


class ProfileSpec(BaseModel):
    """Description of a spectral penalty profile J_p"""

    model_config = ConfigDict(frozen=True)

    kind: ProfileKind = Field(title="Profile kind", default=ProfileKind.laplacian)
    weights: Optional[List[float]] = Field(
        title="Custom profile",
        default=None,
        description="For kind='custom', the diagonal J(1..M)",
    )
    band: Optional[List[int]] = Field(
        title="Selected frequencies",
        default=None,
        description="For kind='band_select', 0-based indices of unpenalized graph frequencies",
    )
    weight: Optional[float] = Field(
        title="Band penalty weight",
        default=None,
        ge=0,
        description="For kind='band_select', the penalty J(i) of frequencies outside the band",
    )

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == ProfileKind.custom and self.weights is None:
            raise ValueError("custom profile requires weights")
        if self.kind == ProfileKind.band_select and (
            self.band is None or self.weight is None
        ):
            raise ValueError("band_select profile requires band and weight")
        return self


def lowpass(size, weight):
    """Profile keeping the ``size`` smoothest graph frequencies unpenalized"""
    return ProfileSpec(
        kind=ProfileKind.band_select, band=list(range(size)), weight=weight
    )


def bandpass(indices, weight):
    return ProfileSpec(kind=ProfileKind.band_select, band=list(indices), weight=weight)


class SpectralPenalty(BaseModel):
    """Quadratic penalty G = V diag(J^2) V^T over graph frequencies"""

    model_config = ConfigDict(frozen=True)

    basis: Array = Field(title="Frequency basis V", description="M x M orthogonal")
    profile_diag: Array = Field(
        title="Profile J", description="Length M nonnegative penalty per frequency"
    )

    @model_validator(mode="after")
    def check_profile(self):
        m = self.profile_diag.shape[0]
        if self.profile_diag.ndim != 1 or self.basis.shape != (m, m):
            raise DimensionError(
                f"Basis {self.basis.shape} does not match profile of length {m}"
            )
        if numpy.any(self.profile_diag < 0) or not numpy.all(
            numpy.isfinite(self.profile_diag)
        ):
            raise ParameterError("Penalty profile entries must be finite and >= 0")
        return self

    @property
    def num_nodes(self):
        return self.profile_diag.shape[0]

    @cached_property
    def penalty_matrix(self):
        """G, symmetric positive semidefinite"""
        g = (self.basis * self.profile_diag**2) @ self.basis.T
        return freeze(_symmetrize(g))


def make_penalty(spectrum, profile=None):
    """Build the penalty G = V J_p^2 V^T for a profile over the graph spectrum.

    Args:
        spectrum (:obj:`GraphSpectrum`): Laplacian spectrum providing V.
        profile (Union[:obj:`ProfileSpec`, dict, str], optional): Defaults to the Laplacian profile.

    Returns:
        :obj:`SpectralPenalty`

    Raises:
        ParameterError: negative weights or band index out of range
        DimensionError: custom profile length differs from the number of nodes
    """
    if profile is None or profile == ProfileKind.laplacian.value:
        profile = ProfileSpec()
    elif isinstance(profile, dict):
        profile = ProfileSpec(**profile)
    m = spectrum.num_nodes
    if profile.kind == ProfileKind.laplacian:
        diag = numpy.sqrt(spectrum.eigenvalues)
    elif profile.kind == ProfileKind.custom:
        diag = numpy.asarray(profile.weights, dtype=float)
        if diag.shape != (m,):
            raise DimensionError(
                f"Custom profile has {diag.size} entries, graph has {m} nodes"
            )
        if numpy.any(diag < 0):
            raise ParameterError("Custom profile entries must be >= 0")
    else:
        band = numpy.asarray(profile.band, dtype=int)
        if band.size and (band.min() < 0 or band.max() >= m):
            raise ParameterError(
                f"Band indices {profile.band} out of range for {m} graph frequencies"
            )
        diag = numpy.full(m, float(profile.weight))
        diag[band] = 0.0
    return SpectralPenalty(basis=spectrum.basis, profile_diag=diag)


def penalty_from_matrix(matrix):
    """Express an arbitrary positive semidefinite penalty matrix as a :obj:`SpectralPenalty`"""
    spectrum = eigendecompose(matrix)
    return SpectralPenalty(
        basis=spectrum.basis, profile_diag=numpy.sqrt(spectrum.eigenvalues)
    )


class SmoothingOperator(BaseModel):
    """B = (I + alpha G)^-1, held spectrally as V diag(1 / (1 + alpha J^2)) V^T"""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(title="Graph regularization alpha", ge=0)
    basis: Array = Field(title="Frequency basis V")
    profile_diag: Array = Field(title="Penalty profile J")

    @property
    def num_nodes(self):
        return self.profile_diag.shape[0]

    @cached_property
    def growth(self):
        """(1 + alpha J^2) per frequency"""
        return freeze(1.0 + self.alpha * self.profile_diag**2)

    @cached_property
    def factors(self):
        """Eigenvalues of B, each in (0, 1]"""
        return freeze(1.0 / self.growth)

    @cached_property
    def b_matrix(self):
        if self.alpha == 0:
            return freeze(numpy.eye(self.num_nodes))
        return freeze(_symmetrize((self.basis * self.factors) @ self.basis.T))

    @cached_property
    def b_squared(self):
        if self.alpha == 0:
            return freeze(numpy.eye(self.num_nodes))
        return freeze(_symmetrize((self.basis * self.factors**2) @ self.basis.T))


def make_smoothing_operator(penalty, alpha):
    """Smoothing operator B = (I_M + alpha G)^-1 for a penalty.

    Raises:
        ParameterError: ``alpha`` is negative.
    """
    if not alpha >= 0:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")
    return SmoothingOperator(
        alpha=alpha, basis=penalty.basis, profile_diag=penalty.profile_diag
    )


def generative_project(op, y):
    """Closest signal with the penalty's spectral profile: argmin_z |y - z|^2 + alpha z^T G z.

    Args:
        op (:obj:`SmoothingOperator`): the operator B.
        y: length-M signal, or an n x M array with one signal per row.
    """
    y = numpy.asarray(y, dtype=float)
    if y.shape[-1] != op.num_nodes:
        raise DimensionError(
            f"Signal has {y.shape[-1]} entries, operator has {op.num_nodes} nodes"
        )
    # B is symmetric, so rows map as Y B
    return y @ op.b_matrix


def normalize_adjacency(adjacency):
    """Scale an adjacency matrix so its largest eigenvalue modulus is one.

    Raises:
        NormalizationError: the spectral radius is zero.
    """
    adjacency = _square(adjacency, "Adjacency")
    radius = float(numpy.max(numpy.abs(numpy.linalg.eigvals(adjacency))))
    if radius <= 1e-12 * max(numpy.linalg.norm(adjacency), 1e-300):
        raise NormalizationError(
            "Adjacency has zero spectral radius and cannot be normalized"
        )
    return adjacency / radius


def directed_penalty(adjacency):
    """Penalty (I - A)^T (I - A) of a directed graph, A spectrally normalized"""
    shift = numpy.eye(adjacency.shape[0]) - normalize_adjacency(adjacency)
    return penalty_from_matrix(shift.T @ shift)


def directed_smoothing_operator(adjacency, alpha):
    """B_d = (I_M + alpha (I - A)^T (I - A))^-1 for a possibly asymmetric adjacency"""
    return make_smoothing_operator(directed_penalty(adjacency), alpha)


def directed_smoothness(adjacency, y):
    """Total variation |y - A y|^2 of a signal over a directed graph"""
    y = numpy.asarray(y, dtype=float)
    residual = y - normalize_adjacency(adjacency) @ y
    return float(residual @ residual)


def check_vec_kronecker_identity(Phi, W, B):
    """Check vec(Phi W B) == (B (x) Phi) vec(W) with column stacking.

    Holds for symmetric B, which every smoothing operator is.

    Args:
        Phi: N x K matrix.
        W: K x M matrix.
        B: M x M matrix.
    """
    Phi = numpy.asarray(Phi, dtype=float)
    W = numpy.asarray(W, dtype=float)
    B = _square(B, "B")
    if Phi.ndim != 2 or W.ndim != 2 or Phi.shape[1] != W.shape[0] or W.shape[1] != B.shape[0]:
        raise DimensionError(
            f"Incompatible shapes Phi {Phi.shape}, W {W.shape}, B {B.shape}"
        )
    lhs = vec(Phi @ W @ B)
    rhs = numpy.kron(B, Phi) @ vec(W)
    return bool(numpy.linalg.norm(lhs - rhs) <= KRONECKER_RTOL * numpy.linalg.norm(lhs))
