from .core import Graph, build_laplacian
from .spectral import (
    GraphSpectrum,
    ProfileKind,
    ProfileSpec,
    SmoothingOperator,
    SpectralPenalty,
    bandpass,
    check_vec_kronecker_identity,
    directed_penalty,
    directed_smoothing_operator,
    directed_smoothness,
    eigendecompose,
    generative_project,
    gft,
    igft,
    lowpass,
    make_penalty,
    make_smoothing_operator,
    normalize_adjacency,
    penalty_from_matrix,
    smoothness,
)
from .cache import SpectrumCache
