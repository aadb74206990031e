"""Monte-Carlo comparison of conventional and graph Gaussian processes.

Each trial draws its own train/test split and noise from ``SeedSequence([seed,
trial])``, so trials are independent and can run in any order. Trials are
dask.delayed tasks and are always gathered in trial order.
"""

import logging
import os
from enum import Enum
from typing import List

import dask
import fsspec
import numpy
import orjson
import pandas
import xarray
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..exceptions import DataError
from ..graph import make_penalty, make_smoothing_operator
from ..gp import KernelFamily, KernelSpec, fit_operator, predict_mean, rbf_bandwidth_heuristic
from .data import add_noise_snr, standardize
from .selection import JSON_OPTIONS, CvConfig, grid_search_cv, identity_penalty, nmse

SCHEDULER = os.environ.get("GPGRAPH_SCHEDULER", "threads")
GENERATOR = "numpy.random.PCG64"
CSV_COLUMNS = [
    "method",
    "n_train",
    "snr_db",
    "seed_count",
    "nmse_db_mean",
    "nmse_db_std",
    "nmse_ratio_db",
]

logger = logging.getLogger("gpgraph.experiment")


class Method(str, Enum):
    """Compared regression methods:
    gp-l: conventional GP, linear kernel
    gpg-l: graph GP, linear kernel
    gp-k: conventional GP, rbf kernel with the bandwidth heuristic
    gpg-k: graph GP, rbf kernel with the bandwidth heuristic
    """

    gp_l = "gp-l"
    gpg_l = "gpg-l"
    gp_k = "gp-k"
    gpg_k = "gpg-k"

    @property
    def kernel_family(self):
        return KernelFamily.linear if self.value.endswith("-l") else KernelFamily.rbf

    @property
    def uses_graph(self):
        return self.value.startswith("gpg")


class CvMode(str, Enum):
    """per-trial: tune (alpha, gamma) in every trial
    once: tune in the first trial and reuse the values
    """

    per_trial = "per-trial"
    once = "once"


class BenchmarkSpec(BaseModel):
    """Benchmark protocol"""

    model_config = ConfigDict(frozen=True)

    methods: List[Method] = Field(title="Methods", default=list(Method), min_length=1)
    train_sizes: List[int] = Field(title="Training set sizes", default=[5, 10, 20], min_length=1)
    snr_db: float = Field(title="Training noise SNR in dB", default=0.0)
    trials: int = Field(title="Monte-Carlo trials", default=10, ge=1)
    seed: int = Field(title="Base seed", default=0, ge=0)
    train_frac: float = Field(
        title="Training pool fraction",
        default=0.5,
        gt=0,
        lt=1,
        description="Share of samples available for training, the rest is the test set",
    )
    cv: CvConfig = Field(title="Cross-validation settings", default=CvConfig())
    cv_mode: CvMode = Field(title="Cross-validation mode", default=CvMode.per_trial)
    standardize: bool = Field(title="Standardize inputs per trial", default=False)

    @field_validator("train_sizes")
    @classmethod
    def check_sizes(cls, value):
        if any(n < 2 for n in value):
            raise ValueError("training sizes must be >= 2")
        return sorted(set(value))


def _tune(method, X, T, graph, penalty, beta, cv, bandwidth):
    config = cv.model_copy(update={"folds": min(cv.folds, T.shape[0])})
    if not method.uses_graph:
        config = config.model_copy(update={"alpha_grid": [0.0]})
    report = grid_search_cv(X, T, graph, penalty, method.kernel_family, beta, config, bandwidth)
    return report.best_alpha, report.best_gamma


def _run_trial(trial, dataset, graph, penalty, spec, fixed=None):
    """Score every (method, size) pair on one random split.

    Returns:
        dict: (method, n) -> (nmse_db, error energy, reference energy, alpha, gamma)
    """
    split_seed, noise_seed = numpy.random.SeedSequence([spec.seed, trial]).spawn(2)
    num = dataset.num_samples
    pool_size = int(num * spec.train_frac)
    order = numpy.random.default_rng(split_seed).permutation(num)
    pool, test = order[:pool_size], order[pool_size:]
    reference = dataset.clean_targets if dataset.clean_targets is not None else dataset.targets
    noisy, beta = add_noise_snr(reference[pool], spec.snr_db, noise_seed)
    T0_test = reference[test]
    ref_energy = float(numpy.sum(T0_test**2))
    smoothing_free = identity_penalty(dataset.num_nodes)
    outcome = {}
    for n in spec.train_sizes:
        X_train, T_train = dataset.inputs[pool[:n]], noisy[:n]
        X_test = dataset.inputs[test]
        if spec.standardize:
            X_train, transform = standardize(X_train)
            X_test = transform.apply(X_test)
        for method in spec.methods:
            method_penalty = penalty if method.uses_graph else smoothing_free
            bandwidth = (
                rbf_bandwidth_heuristic(X_train)
                if method.kernel_family == KernelFamily.rbf
                else None
            )
            if fixed is not None:
                alpha, gamma = fixed[(method, n)]
            else:
                alpha, gamma = _tune(
                    method, X_train, T_train, graph, method_penalty, beta, spec.cv, bandwidth
                )
            kernel = KernelSpec(family=method.kernel_family, gamma=gamma, bandwidth=bandwidth)
            smoothing = make_smoothing_operator(method_penalty, alpha)
            model = fit_operator(X_train, T_train, smoothing, kernel, beta)
            Y = predict_mean(model, X_test)
            err_energy = float(numpy.sum((Y - T0_test) ** 2))
            score = nmse(Y, T0_test)
            outcome[(method, n)] = (score, err_energy, ref_energy, alpha, gamma)
    logger.info("Trial %d finished", trial)
    return outcome


def run_benchmark(dataset, graph, spec, penalty=None, scheduler=None):
    """Run the benchmark protocol.

    For each trial: split the samples into a training pool and a test set, add
    noise at ``spec.snr_db`` to the training pool, take nested training sets of
    each size from the pool, cross-validate (alpha, gamma) per method against
    the noisy targets, fit, and score the test predictions against the clean
    test targets.

    Args:
        dataset (:obj:`gpgraph.experiment.Dataset`): samples; ``clean_targets`` is
            the reference signal when present.
        graph (:obj:`gpgraph.graph.Graph`): graph over the target nodes.
        spec (:obj:`BenchmarkSpec`): protocol.
        penalty (:obj:`gpgraph.graph.SpectralPenalty`, optional): Laplacian profile by default.
        scheduler (str, optional): dask scheduler, ``GPGRAPH_SCHEDULER`` by default.

    Returns:
        :obj:`BenchmarkResults`

    Raises:
        DataError: the training pool or test set is too small for the spec.
    """
    pool_size = int(dataset.num_samples * spec.train_frac)
    if max(spec.train_sizes) > pool_size:
        raise DataError(
            f"Training size {max(spec.train_sizes)} exceeds the pool of {pool_size} samples"
        )
    if pool_size >= dataset.num_samples:
        raise DataError("No samples left for testing")
    if dataset.num_nodes != graph.num_nodes:
        raise DataError(f"Targets have {dataset.num_nodes} columns, graph has {graph.num_nodes} nodes")
    if penalty is None and any(m.uses_graph for m in spec.methods):
        penalty = make_penalty(graph.spectrum)
    scheduler = scheduler or SCHEDULER
    trials = list(range(spec.trials))
    fixed = None
    outcomes = []
    if spec.cv_mode == CvMode.once:
        first = _run_trial(0, dataset, graph, penalty, spec)
        fixed = {key: value[3:] for key, value in first.items()}
        outcomes.append(first)
        trials = trials[1:]
    tasks = [
        dask.delayed(_run_trial)(trial, dataset, graph, penalty, spec, fixed)
        for trial in trials
    ]
    outcomes.extend(dask.compute(*tasks, scheduler=scheduler))
    return BenchmarkResults(_to_cube(outcomes, spec), spec)


def _to_cube(outcomes, spec):
    methods = [m.value for m in spec.methods]
    shape = (len(methods), len(spec.train_sizes), len(outcomes))
    fields = ["nmse_db", "error_energy", "reference_energy", "alpha", "gamma"]
    data = {name: numpy.empty(shape) for name in fields}
    for t, outcome in enumerate(outcomes):
        for i, method in enumerate(spec.methods):
            for j, n in enumerate(spec.train_sizes):
                for name, value in zip(fields, outcome[(method, n)]):
                    data[name][i, j, t] = value
    dims = ("method", "n_train", "trial")
    coords = {"method": methods, "n_train": spec.train_sizes, "trial": numpy.arange(len(outcomes))}
    return xarray.Dataset({name: (dims, values) for name, values in data.items()}, coords=coords)


class BenchmarkResults(object):
    """Benchmark summary.
    This class behaves like an immutable dictionary keyed by ``(method, n_train)``
    """

    def __init__(self, cube, spec):
        self.cube = cube
        self.spec = spec
        self._keys = [
            (str(m), int(n)) for m in cube["method"].values for n in cube["n_train"].values
        ]

    def __len__(self):
        return len(self._keys)

    def __getitem__(self, item):
        method, n_train = item
        key = (Method(method).value, int(n_train))
        if key not in self._keys:
            raise KeyError(f"No results for {item}")
        cell = self.cube.sel({"method": key[0], "n_train": key[1]})
        scores = cell["nmse_db"].values
        ratio = float(cell["error_energy"].sum()) / float(cell["reference_energy"].sum())
        return {
            "method": key[0],
            "n_train": key[1],
            "snr_db": self.spec.snr_db,
            "seed_count": int(scores.size),
            "nmse_db_mean": float(numpy.mean(scores)),
            "nmse_db_std": float(numpy.std(scores)),
            "nmse_ratio_db": float(10 * numpy.log10(ratio)) if ratio > 0 else float("-inf"),
        }

    def __setitem__(self, item, value):
        raise TypeError("Benchmark results are read only")

    def __iter__(self):
        for key in self._keys:
            yield self[key]

    def __str__(self):
        lines = [
            f" {e['method']:>6} N={e['n_train']:<5d} {e['nmse_db_mean']:8.3f} +/- {e['nmse_db_std']:.3f} dB"
            for e in self
        ]
        return (
            f"Benchmark over {self.spec.trials} trials at {self.spec.snr_db:g} dB SNR:\n"
            + "\n".join(lines)
        )

    def keys(self):
        return list(self._keys)

    def nmse(self):
        """:obj:`xarray.DataArray` of per-trial NMSE in dB with dims (method, n_train, trial)"""
        return self.cube["nmse_db"]

    def to_dict(self):
        return {
            "generator": GENERATOR,
            "cv_mode": self.spec.cv_mode.value,
            "spec": self.spec.model_dump(mode="json"),
            "results": list(self),
        }

    def to_json(self):
        return orjson.dumps(self.to_dict(), option=JSON_OPTIONS)

    def to_frame(self):
        return pandas.DataFrame(list(self), columns=CSV_COLUMNS)

    def to_csv(self, path):
        """Write one headerless row per (method, n_train) in ``CSV_COLUMNS`` order"""
        with fsspec.open(path, "w") as f:
            self.to_frame().to_csv(f, header=False, index=False, float_format="%.17g")
