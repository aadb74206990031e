from .kernels import (
    KernelFamily,
    KernelSpec,
    cross_kernel,
    cross_kernel_matrix,
    kernel_eval,
    kernel_matrix,
    rbf_bandwidth_heuristic,
)
from .model import (
    GpgModel,
    PredictiveDistribution,
    conventional_marginal_trace,
    fit,
    fit_operator,
    marginal_trace,
    mean_spectrum,
    predict,
    predict_batch,
    predict_conventional,
    predict_mean,
    predict_naive,
    predictive_trace_pair,
    shrinkage_factors,
)
