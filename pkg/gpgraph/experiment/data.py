"""Dataset ingestion, graph construction and synthetic data generation.

All files are headerless comma-separated matrices read and written through
fsspec, so any fsspec URL works as a path.
"""

import logging
import os
import warnings
from enum import Enum
from typing import Dict, Optional

import fsspec
import numpy
import orjson
import pandas
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial.distance import pdist, squareform

from ..arrays import Array, freeze
from ..exceptions import DataError, DimensionError, DomainError, GraphError, ParameterError
from ..graph import Graph, generative_project, gft, make_penalty, make_smoothing_operator

EARTH_RADIUS_KM = 6371.0088
CSV_FORMAT = "%.17g"

logger = logging.getLogger("gpgraph.experiment")


class SynthMode(str, Enum):
    """Input construction for synthetic data:
    latent: noisy random mixtures of the targets' low graph frequencies
    lagged: previous target vector, x_n = t_{n-1}, from an AR(1) latent sequence
    """

    latent = "latent"
    lagged = "lagged"


class Dataset(BaseModel):
    """Paired inputs and graph-signal targets"""

    model_config = ConfigDict(frozen=True)

    inputs: Array = Field(title="Inputs X", description="N x d")
    targets: Array = Field(title="Targets T", description="N x M, possibly noisy")
    clean_targets: Optional[Array] = Field(
        title="Clean targets T0", default=None, description="N x M noise-free reference"
    )
    meta: Dict[str, str] = Field(title="Free-form tags", default={})

    @model_validator(mode="after")
    def check_consistency(self):
        for name in ("inputs", "targets", "clean_targets"):
            value = getattr(self, name)
            if value is None:
                continue
            if value.ndim != 2:
                raise DimensionError(f"{name} must be a matrix, got shape {value.shape}")
            if not numpy.all(numpy.isfinite(value)):
                raise DataError(f"{name} contain non-finite values")
        n = self.inputs.shape[0]
        if self.targets.shape[0] != n:
            raise DimensionError(f"inputs have {n} rows but targets have {self.targets.shape[0]}")
        if self.clean_targets is not None and self.clean_targets.shape != self.targets.shape:
            raise DimensionError(
                f"clean targets {self.clean_targets.shape} differ from targets {self.targets.shape}"
            )
        return self

    @property
    def num_samples(self):
        return self.inputs.shape[0]

    @property
    def num_nodes(self):
        return self.targets.shape[1]

    @property
    def input_dim(self):
        return self.inputs.shape[1]

    def subset(self, indices):
        """Dataset restricted to the given rows"""
        indices = numpy.asarray(indices, dtype=int)
        return Dataset(
            inputs=self.inputs[indices],
            targets=self.targets[indices],
            clean_targets=None if self.clean_targets is None else self.clean_targets[indices],
            meta=self.meta,
        )

    def log10(self):
        """Dataset with log10 applied to the targets, for positive-valued signals

        Raises:
            DomainError: some target is not strictly positive.
        """
        arrays = [self.targets] + ([self.clean_targets] if self.clean_targets is not None else [])
        if any(numpy.any(a <= 0) for a in arrays):
            raise DomainError("log10 transform requires strictly positive targets")
        return Dataset(
            inputs=self.inputs,
            targets=numpy.log10(self.targets),
            clean_targets=None if self.clean_targets is None else numpy.log10(self.clean_targets),
            meta={**self.meta, "transform": "log10"},
        )


def read_matrix(path):
    """Read a headerless numeric CSV into a 2-d float array.

    Raises:
        DataError: empty file, ragged rows, or a non-numeric or non-finite cell.
            The message names the 1-based line and column.
    """
    try:
        with fsspec.open(path, "r") as f:
            frame = pandas.read_csv(
                f, header=None, dtype=str, keep_default_na=False, skipinitialspace=True
            )
    except FileNotFoundError as e:
        raise DataError(f"File not found: {path}") from e
    except pandas.errors.EmptyDataError as e:
        raise DataError(f"{path} is empty") from e
    except pandas.errors.ParserError as e:
        raise DataError(f"Could not parse {path}: {e}") from e
    cells = frame.to_numpy()
    try:
        values = cells.astype(float)
    except (TypeError, ValueError):
        values = None
    if values is None or not numpy.all(numpy.isfinite(values)):
        for (row, col), cell in numpy.ndenumerate(cells):
            try:
                ok = numpy.isfinite(float(cell))
            except (TypeError, ValueError):
                ok = False
            if not ok:
                raise DataError(f"{path}: line {row + 1}, column {col + 1}: invalid value {cell!r}")
    return values


def write_matrix(path, matrix):
    """Write a matrix as headerless CSV with 17 significant digits"""
    matrix = numpy.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    with fsspec.open(path, "w") as f:
        numpy.savetxt(f, matrix, fmt=CSV_FORMAT, delimiter=",")


def load_dataset(inputs_path, targets_path, clean_path=None):
    """Load a dataset from CSV files.

    Args:
        inputs_path (str): N x d inputs.
        targets_path (str): N x M targets, row n paired with input row n.
        clean_path (str, optional): N x M noise-free targets.

    Returns:
        :obj:`Dataset`

    Raises:
        DataError: parse errors, non-finite values or mismatched row counts.
    """
    inputs = read_matrix(inputs_path)
    targets = read_matrix(targets_path)
    if inputs.shape[0] != targets.shape[0]:
        raise DimensionError(
            f"{inputs_path} has {inputs.shape[0]} rows but {targets_path} has {targets.shape[0]}"
        )
    clean = read_matrix(clean_path) if clean_path else None
    return Dataset(inputs=inputs, targets=targets, clean_targets=clean)


def save_dataset(dataset, directory):
    """Write inputs.csv, targets.csv, clean_targets.csv and meta.json under ``directory``

    Returns:
        dict: written paths by name.
    """
    fs, root = fsspec.core.url_to_fs(directory)
    fs.makedirs(root, exist_ok=True)
    paths = {
        "inputs": os.path.join(directory, "inputs.csv"),
        "targets": os.path.join(directory, "targets.csv"),
        "meta": os.path.join(directory, "meta.json"),
    }
    write_matrix(paths["inputs"], dataset.inputs)
    write_matrix(paths["targets"], dataset.targets)
    if dataset.clean_targets is not None:
        paths["clean_targets"] = os.path.join(directory, "clean_targets.csv")
        write_matrix(paths["clean_targets"], dataset.clean_targets)
    with fsspec.open(paths["meta"], "wb") as f:
        f.write(orjson.dumps(dataset.meta, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    return paths


def load_adjacency(path, directed=False):
    """Adjacency CSV as a :obj:`Graph`, or as a validated matrix when ``directed``"""
    matrix = read_matrix(path)
    if not directed:
        return Graph(adjacency=matrix)
    if matrix.shape[0] != matrix.shape[1]:
        raise GraphError(f"Adjacency must be square, got {matrix.shape}")
    if numpy.any(matrix < 0):
        raise GraphError("Adjacency entries must be nonnegative")
    return freeze(matrix)


def euclidean_distance(coords):
    return squareform(pdist(numpy.asarray(coords, dtype=float)))


def great_circle_distance(lonlat):
    """Pairwise haversine distances in km between (longitude, latitude) rows in degrees"""
    lon, lat = numpy.radians(numpy.asarray(lonlat, dtype=float)).T
    dlon = lon[:, None] - lon[None, :]
    dlat = lat[:, None] - lat[None, :]
    h = numpy.sin(dlat / 2) ** 2 + numpy.cos(lat[:, None]) * numpy.cos(lat[None, :]) * numpy.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_KM * numpy.arcsin(numpy.sqrt(numpy.clip(h, 0.0, 1.0)))


def geodesic_graph(coords, distance=None):
    """Gaussian-weighted graph A(i, j) = exp(-d_ij^2 / sum_ij d_ij^2) with zero diagonal.

    Args:
        coords: M x d point coordinates.
        distance (callable, optional): maps ``coords`` to the M x M distance
            matrix, Euclidean by default. :func:`great_circle_distance` suits
            (longitude, latitude) stations.

    Raises:
        GraphError: fewer than two points, or all points coincide.
    """
    coords = numpy.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.shape[0] < 2:
        raise GraphError("A geodesic graph needs at least two points")
    d2 = numpy.asarray((distance or euclidean_distance)(coords), dtype=float) ** 2
    # Normalizer runs over ordered pairs, each unordered pair counted twice
    total = float(d2.sum())
    if total <= 0:
        raise GraphError("All points coincide, edge weights are undefined")
    adjacency = numpy.exp(-d2 / total)
    numpy.fill_diagonal(adjacency, 0.0)
    return Graph(adjacency=(adjacency + adjacency.T) / 2)


def add_noise_snr(T0, snr_db, seed):
    """Add white Gaussian noise at a given SNR.

    The noise variance is the mean per-entry signal power divided by
    10^(snr_db / 10).

    Args:
        T0: clean targets.
        snr_db (float): signal to noise ratio in dB.
        seed: anything :func:`numpy.random.default_rng` accepts.

    Returns:
        tuple: (noisy targets, noise precision beta)

    Raises:
        DomainError: ``T0`` is identically zero.
    """
    T0 = numpy.asarray(T0, dtype=float)
    power = float(numpy.sum(T0**2)) / max(T0.size, 1)
    if power == 0:
        raise DomainError("Cannot calibrate noise against an all-zero signal")
    variance = power / 10 ** (snr_db / 10)
    rng = numpy.random.default_rng(seed)
    noisy = T0 + rng.normal(0.0, numpy.sqrt(variance), size=T0.shape)
    return noisy, 1.0 / variance


def _mean_smoothness(laplacian, Y):
    return float(numpy.mean(numpy.sum((Y @ laplacian) * Y, axis=1) / numpy.sum(Y**2, axis=1)))


def synth_smooth_dataset(
    graph,
    penalty,
    alpha_gen,
    n,
    input_dim,
    seed,
    mode=SynthMode.latent,
    input_noise=0.1,
    ar_coeff=0.9,
):
    """Synthetic regression data whose targets have the penalty's spectral profile.

    Clean targets are t0_n = B y_n with B = (I + alpha_gen G)^-1 and y_n white
    Gaussian latents. In ``latent`` mode the inputs are random mixtures of the
    targets' ``input_dim`` lowest graph-frequency coefficients plus
    ``input_noise`` scaled Gaussian vectors. In ``lagged`` mode the latents
    follow an AR(1) sequence with coefficient ``ar_coeff`` and x_n = t0_{n-1},
    so ``input_dim`` is the number of nodes.

    Returns:
        :obj:`Dataset` with ``targets`` equal to ``clean_targets``; meta records
        the generator and tags ``smooth`` true when the targets are smoother
        than their latents.
    """
    mode = SynthMode(mode)
    if n < 1 or input_dim < 1:
        raise ParameterError(f"Need n >= 1 and input_dim >= 1, got n={n}, input_dim={input_dim}")
    if penalty is None:
        penalty = make_penalty(graph.spectrum)
    op = make_smoothing_operator(penalty, alpha_gen)
    rng = numpy.random.default_rng(seed)
    m = graph.num_nodes
    if mode == SynthMode.latent:
        latents = rng.standard_normal((n, m))
        clean = generative_project(op, latents)
        q = min(input_dim, m)
        coeffs = gft(graph.spectrum, clean.T).T[:, :q]
        mixing = rng.standard_normal((q, input_dim))
        inputs = coeffs @ mixing + input_noise * rng.standard_normal((n, input_dim))
    else:
        if not 0 <= ar_coeff < 1:
            raise ParameterError(f"AR coefficient must lie in [0, 1), got {ar_coeff}")
        latents = numpy.empty((n + 1, m))
        latents[0] = rng.standard_normal(m)
        innovation = numpy.sqrt(1 - ar_coeff**2)
        for i in range(1, n + 1):
            latents[i] = ar_coeff * latents[i - 1] + innovation * rng.standard_normal(m)
        series = generative_project(op, latents)
        inputs, clean, latents = series[:-1], series[1:], latents[1:]
    latent_smoothness = _mean_smoothness(graph.laplacian, latents)
    target_smoothness = _mean_smoothness(graph.laplacian, clean)
    if target_smoothness > latent_smoothness * (1 + 1e-12):
        warnings.warn("Generated targets are rougher than their latents for this penalty")
    smooth = target_smoothness < latent_smoothness * (1 - 1e-12)
    meta = {
        "generator": "synth_smooth_dataset",
        "mode": mode.value,
        "alpha_gen": repr(float(alpha_gen)),
        "seed": str(seed),
        "smooth": "true" if smooth else "false",
    }
    return Dataset(inputs=inputs, targets=clean, clean_targets=clean, meta=meta)


def synthetic_problem(nodes, samples, input_dim=3, alpha_gen=10.0, mode=SynthMode.latent, seed=0):
    """Random geodesic graph over uniform points in the unit square with smooth data on it

    Returns:
        tuple: (:obj:`Graph`, :obj:`Dataset`)
    """
    graph_seed, data_seed = numpy.random.SeedSequence(seed).spawn(2)
    coords = numpy.random.default_rng(graph_seed).uniform(size=(nodes, 2))
    graph = geodesic_graph(coords)
    dataset = synth_smooth_dataset(graph, None, alpha_gen, samples, input_dim, data_seed, mode=mode)
    dataset = dataset.model_copy(update={"meta": {**dataset.meta, "seed": str(seed)}})
    return graph, dataset


class Standardization(BaseModel):
    """Per-feature affine map x -> (x - mean) / scale"""

    model_config = ConfigDict(frozen=True)

    mean: Array = Field(title="Feature means")
    scale: Array = Field(title="Feature standard deviations", description="Zeros replaced by one")

    def apply(self, X):
        X = numpy.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None] if self.mean.shape[0] == 1 else X[None, :]
        if X.shape[1] != self.mean.shape[0]:
            raise DimensionError(f"Inputs have {X.shape[1]} features, expected {self.mean.shape[0]}")
        return (X - self.mean) / self.scale


def standardize(X, reference=None):
    """Z-score features with statistics of ``reference`` (``X`` itself by default)

    Returns:
        tuple: (standardized X, :obj:`Standardization`)
    """
    X = numpy.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    ref = X if reference is None else numpy.asarray(reference, dtype=float).reshape(-1, X.shape[1])
    scale = ref.std(axis=0)
    scale[scale == 0] = 1.0
    transform = Standardization(mean=ref.mean(axis=0), scale=scale)
    return transform.apply(X), transform


def node_split(signals, graph, target_nodes):
    """Predict the signals on ``target_nodes`` from the signals on every other node.

    Args:
        signals: S x M matrix, one graph signal per row.
        graph (:obj:`Graph`): graph over all M nodes.
        target_nodes: 0-based indices of the nodes to predict.

    Returns:
        tuple: (:obj:`Dataset` with S rows, :obj:`Graph` induced on the target nodes)
    """
    signals = numpy.asarray(signals, dtype=float)
    if signals.ndim != 2 or signals.shape[1] != graph.num_nodes:
        raise DimensionError(
            f"Signals of shape {signals.shape} do not match a graph with {graph.num_nodes} nodes"
        )
    targets = numpy.unique(numpy.asarray(target_nodes, dtype=int))
    if targets.size == 0 or targets.min() < 0 or targets.max() >= graph.num_nodes:
        raise ParameterError(f"Target nodes {list(target_nodes)} out of range")
    sources = numpy.setdiff1d(numpy.arange(graph.num_nodes), targets)
    if sources.size == 0:
        raise ParameterError("At least one node must remain as input")
    dataset = Dataset(
        inputs=signals[:, sources],
        targets=signals[:, targets],
        meta={"split": "nodes", "target_nodes": ",".join(str(t) for t in targets)},
    )
    return dataset, graph.subgraph(targets)
