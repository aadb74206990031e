"""Cross-validated choice of (alpha, gamma) and the NMSE metric."""

import logging
from typing import List, Optional

import numpy
import orjson
import pandas
from pydantic import BaseModel, ConfigDict, Field, field_validator
from sklearn.model_selection import KFold

from ..exceptions import DimensionError, DomainError, ParameterError
from ..graph import SpectralPenalty, make_penalty, make_smoothing_operator
from ..gp import KernelFamily, KernelSpec, fit_operator, predict_mean, rbf_bandwidth_heuristic

DEFAULT_ALPHA_GRID = [0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0]
DEFAULT_GAMMA_GRID = [float(g) for g in numpy.logspace(-3, 3, 7)]
PERFECT_FIT = float("-inf")
JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS

logger = logging.getLogger("gpgraph.experiment")


class CvConfig(BaseModel):
    """K-fold cross-validation settings"""

    model_config = ConfigDict(frozen=True)

    folds: int = Field(title="Number of folds", default=5, ge=2)
    alpha_grid: List[float] = Field(
        title="Graph regularization grid", default=DEFAULT_ALPHA_GRID, min_length=1
    )
    gamma_grid: List[float] = Field(
        title="Kernel precision grid", default=DEFAULT_GAMMA_GRID, min_length=1
    )
    seed: int = Field(title="Fold shuffling seed", default=0, ge=0, le=2**32 - 1)

    @field_validator("alpha_grid")
    @classmethod
    def check_alpha(cls, value):
        if any(not a >= 0 for a in value):
            raise ValueError("alpha grid values must be >= 0")
        return value

    @field_validator("gamma_grid")
    @classmethod
    def check_gamma(cls, value):
        if any(not g > 0 for g in value):
            raise ValueError("gamma grid values must be > 0")
        return value


class CvScore(BaseModel):
    alpha: float
    gamma: float
    nmse_db: float = Field(description="Mean validation NMSE over folds, -inf for a perfect fit")


class CvReport(BaseModel):
    """Outcome of a cross-validated grid search"""

    model_config = ConfigDict(frozen=True)

    best_alpha: float = Field(title="Selected alpha")
    best_gamma: float = Field(title="Selected gamma")
    folds: int = Field(title="Number of folds")
    seed: int = Field(title="Fold shuffling seed")
    scores: List[CvScore] = Field(title="Scores in grid order")
    fold_assignments: List[List[int]] = Field(
        title="Validation indices of each fold", default=[]
    )

    @property
    def score_table(self):
        """:obj:`pandas.DataFrame` of mean validation NMSE (dB), alpha rows by gamma columns"""
        frame = pandas.DataFrame([s.model_dump() for s in self.scores])
        return frame.pivot(index="alpha", columns="gamma", values="nmse_db")

    def to_dict(self):
        return self.model_dump()

    def to_json(self):
        return orjson.dumps(self.to_dict(), option=JSON_OPTIONS)


def kfold_split(n, folds, seed):
    """Shuffled partition of range(n) into ``folds`` validation sets.

    Fold sizes differ by at most one, larger folds first.

    Returns:
        list: ``(train, validation)`` index arrays, both sorted.

    Raises:
        ParameterError: ``folds`` is below 2 or above ``n``.
    """
    if folds < 2 or folds > n:
        raise ParameterError(f"Cannot split {n} samples into {folds} folds")
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    return [
        (numpy.sort(train), numpy.sort(validation))
        for train, validation in splitter.split(numpy.arange(n))
    ]


def _energies(Y, T0):
    Y = numpy.asarray(Y, dtype=float)
    T0 = numpy.asarray(T0, dtype=float)
    if Y.shape != T0.shape:
        raise DimensionError(f"Prediction shape {Y.shape} differs from reference {T0.shape}")
    reference = float(numpy.sum(T0**2))
    if reference == 0:
        raise DomainError("NMSE is undefined for an all-zero reference")
    return float(numpy.sum((Y - T0) ** 2)), reference


def _db(error, reference):
    if error == 0:
        return PERFECT_FIT
    return 10.0 * numpy.log10(error / reference)


def nmse(Y, T0):
    """Normalized mean square error 10 log10(|Y - T0|^2 / |T0|^2) in dB.

    Returns ``PERFECT_FIT`` (-inf) when ``Y`` equals ``T0``.
    """
    return _db(*_energies(Y, T0))


def nmse_ratio(Ys, T0s):
    """NMSE of summed error energy over summed reference energy across realizations"""
    error = reference = 0.0
    for Y, T0 in zip(Ys, T0s):
        e, r = _energies(Y, T0)
        error += e
        reference += r
    return _db(error, reference)


def select_best(scores):
    """Lowest NMSE, ties to the smallest alpha then the smallest gamma"""
    return min(scores, key=lambda s: (s.nmse_db, s.alpha, s.gamma))


def identity_penalty(num_nodes):
    """Penalty of the edgeless graph, under which every alpha gives B = I"""
    return SpectralPenalty(basis=numpy.eye(num_nodes), profile_diag=numpy.zeros(num_nodes))


def grid_search_cv(X, T, graph, penalty, kernel_family, beta, config=None, bandwidth=None):
    """Choose (alpha, gamma) by K-fold cross-validation.

    Each grid pair is fitted on every fold's training split and scored by the
    validation NMSE against the observed, possibly noisy, validation targets.

    Args:
        X: N x d inputs.
        T: N x M targets.
        graph (:obj:`gpgraph.graph.Graph`): None with no penalty means no graph coupling.
        penalty (:obj:`SpectralPenalty`): None for the Laplacian profile of ``graph``.
        kernel_family (:obj:`KernelFamily`): kernel to tune.
        beta (float): known noise precision.
        config (:obj:`CvConfig`, optional): folds, grids and seed.
        bandwidth (float, optional): rbf bandwidth, by default the heuristic on ``X``.

    Returns:
        :obj:`CvReport`
    """
    config = config or CvConfig()
    X = numpy.asarray(X, dtype=float)
    T = numpy.asarray(T, dtype=float)
    if T.ndim == 1:
        T = T[:, None]
    splits = kfold_split(T.shape[0], config.folds, config.seed)
    if penalty is None:
        penalty = make_penalty(graph.spectrum) if graph is not None else identity_penalty(T.shape[1])
    kernel_family = KernelFamily(kernel_family)
    if kernel_family == KernelFamily.rbf and bandwidth is None:
        bandwidth = rbf_bandwidth_heuristic(X)
    base = KernelSpec(
        family=kernel_family,
        bandwidth=bandwidth if kernel_family == KernelFamily.rbf else None,
    )
    scores = []
    for alpha in config.alpha_grid:
        smoothing = make_smoothing_operator(penalty, alpha)
        for gamma in config.gamma_grid:
            kernel = base.with_gamma(gamma)
            fold_scores = []
            for train, validation in splits:
                model = fit_operator(X[train], T[train], smoothing, kernel, beta)
                fold_scores.append(nmse(predict_mean(model, X[validation]), T[validation]))
            scores.append(CvScore(alpha=alpha, gamma=gamma, nmse_db=float(numpy.mean(fold_scores))))
    best = select_best(scores)
    logger.debug("CV selected alpha=%g gamma=%g (%.3f dB)", best.alpha, best.gamma, best.nmse_db)
    return CvReport(
        best_alpha=best.alpha,
        best_gamma=best.gamma,
        folds=config.folds,
        seed=config.seed,
        scores=scores,
        fold_assignments=[v.tolist() for _, v in splits],
    )
