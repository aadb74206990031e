"""Console script for gpgraph."""

import logging
import os
import sys

import click
import fsspec
import numpy
import orjson
from decorator import decorator
from pydantic import ValidationError

from .exceptions import GpgError, ParameterError
from .graph import (
    ProfileKind,
    ProfileSpec,
    SpectrumCache,
    directed_penalty,
    make_penalty,
)
from .gp import (
    KernelFamily,
    KernelSpec,
    conventional_marginal_trace,
    marginal_trace,
    predict_batch,
    rbf_bandwidth_heuristic,
)
from .experiment import (
    BenchmarkSpec,
    CvConfig,
    CvMode,
    Dataset,
    Method,
    ModelArtifact,
    SynthMode,
    add_noise_snr,
    grid_search_cv,
    load_adjacency,
    load_dataset,
    read_matrix,
    run_benchmark,
    save_dataset,
    standardize,
    synthetic_problem,
    write_matrix,
)
from .experiment.selection import DEFAULT_ALPHA_GRID, DEFAULT_GAMMA_GRID, JSON_OPTIONS

logger = logging.getLogger("gpgraph.cli")


class Settings:
    def __init__(self, output_dir="."):
        self.output_dir = output_dir

    def path(self, name):
        return os.path.join(self.output_dir, name)


pass_settings = click.make_pass_decorator(Settings, ensure=True)


@decorator
def handle_errors(func, *args, **kwargs):
    """Turn library errors into a message on stderr and the matching exit code"""
    try:
        return func(*args, **kwargs)
    except GpgError as e:
        click.echo(f"{type(e).__name__}: {e}", err=True)
        sys.exit(e.exit_code)
    except ValidationError as e:
        click.echo(f"Invalid parameters: {e}", err=True)
        sys.exit(ParameterError.exit_code)


def echo_json(content):
    click.echo(orjson.dumps(content, option=JSON_OPTIONS).decode())


def parse_floats(ctx, param, value):
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma separated numbers, got {value!r}")


def parse_ints(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma separated integers, got {value!r}")


def parse_indices(text):
    """'0,2,5-7' -> [0, 2, 5, 6, 7]"""
    indices = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            start, stop = part.split("-")
            indices.extend(range(int(start), int(stop) + 1))
        elif part:
            indices.append(int(part))
    return indices


def parse_profile(text):
    """Profile flag: ``laplacian``, ``band:<indices>:<weight>`` or ``custom:<csv path>``"""
    kind, _, rest = text.partition(":")
    try:
        if kind == "laplacian" and not rest:
            return ProfileSpec(kind=ProfileKind.laplacian)
        if kind == "band":
            indices, _, weight = rest.rpartition(":")
            return ProfileSpec(
                kind=ProfileKind.band_select, band=parse_indices(indices), weight=float(weight)
            )
        if kind == "custom" and rest:
            return ProfileSpec(kind=ProfileKind.custom, weights=read_matrix(rest).ravel().tolist())
    except ValueError as e:
        raise ParameterError(f"Invalid profile {text!r}: {e}")
    raise ParameterError(f"Unknown profile {text!r}, use laplacian, band:<indices>:<weight> or custom:<path>")


def load_penalty(graph_path, directed, profile, cache_timeout):
    """Graph (None when directed), penalty and adjacency matrix from an adjacency CSV"""
    if directed:
        adjacency = load_adjacency(graph_path, directed=True)
        if profile.kind != ProfileKind.laplacian:
            logger.warning("Spectral profile ignored for a directed graph")
        return None, directed_penalty(adjacency), adjacency
    graph = load_adjacency(graph_path)
    if cache_timeout > 0:
        spectrum = SpectrumCache(cache_timeout=cache_timeout).spectrum(graph.laplacian)
    else:
        spectrum = graph.spectrum
    return graph, make_penalty(spectrum, profile), graph.adjacency


def load_inputs(inputs, targets, log10, scale):
    dataset = load_dataset(inputs, targets)
    if log10:
        dataset = dataset.log10()
    X = dataset.inputs
    transform = None
    if scale:
        X, transform = standardize(X)
    return X, dataset.targets, transform


def cv_config(folds, alpha_grid, gamma_grid, seed):
    return CvConfig(
        folds=folds,
        alpha_grid=alpha_grid or DEFAULT_ALPHA_GRID,
        gamma_grid=gamma_grid or DEFAULT_GAMMA_GRID,
        seed=seed,
    )


cache_option = click.option(
    "--cache-timeout",
    type=int,
    default=0,
    envvar="GPGRAPH_CACHE_TIMEOUT",
    show_default=True,
    help="Seconds to cache Laplacian spectra on disk, 0 disables, defaults to GPGRAPH_CACHE_TIMEOUT env",
)


@click.group()
@click.option("-v", "--verbose", count=True, help="Increase logging on stderr")
@click.option(
    "-o",
    "--output-dir",
    default=".",
    envvar="GPGRAPH_OUTPUT_DIR",
    help="Default directory for output files, defaults to GPGRAPH_OUTPUT_DIR env",
)
@pass_settings
def main(settings, verbose, output_dir):
    """Gaussian process regression over graphs."""
    logging.basicConfig(
        stream=sys.stderr,
        level=max(logging.WARNING - 10 * verbose, logging.DEBUG),
        format="%(levelname)s %(name)s: %(message)s",
    )
    settings.output_dir = output_dir


# =====================================================================================
# Model commands
# =====================================================================================
@main.command()
@click.option("--inputs", required=True, help="Inputs CSV, N rows x d columns")
@click.option("--targets", required=True, help="Targets CSV, N rows x M columns")
@click.option("--graph", "graph_path", required=True, help="Adjacency CSV, M x M")
@click.option("--directed", is_flag=True, help="Treat the adjacency as a directed graph")
@click.option("--profile", default="laplacian", show_default=True, help="Spectral penalty profile")
@click.option("--kernel", type=click.Choice([k.value for k in KernelFamily]), default="rbf", show_default=True)
@click.option("--alpha", type=float, default=0.0, show_default=True, help="Graph regularization")
@click.option("--beta", type=float, required=True, help="Noise precision")
@click.option("--gamma", type=float, default=1.0, show_default=True, help="Kernel precision")
@click.option("--bandwidth", type=float, help="RBF bandwidth, defaults to the training-input heuristic")
@click.option("--cv", is_flag=True, help="Select alpha and gamma by cross-validation")
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--alpha-grid", callback=parse_floats, help="Comma separated alpha values for --cv")
@click.option("--gamma-grid", callback=parse_floats, help="Comma separated gamma values for --cv")
@click.option("--seed", type=int, default=0, show_default=True, help="Fold shuffling seed")
@click.option("--standardize", "scale", is_flag=True, help="Z-score the input features")
@click.option("--log10", is_flag=True, help="Model log10 of the targets")
@click.option("--model", "model_path", help="Model output file, defaults to <output-dir>/model.json")
@cache_option
@pass_settings
@handle_errors
def fit(
    settings,
    inputs,
    targets,
    graph_path,
    directed,
    profile,
    kernel,
    alpha,
    beta,
    gamma,
    bandwidth,
    cv,
    folds,
    alpha_grid,
    gamma_grid,
    seed,
    scale,
    log10,
    model_path,
    cache_timeout,
):
    """Fit a model and print its summary as JSON."""
    X, T, transform = load_inputs(inputs, targets, log10, scale)
    profile_spec = parse_profile(profile)
    graph, penalty, adjacency = load_penalty(graph_path, directed, profile_spec, cache_timeout)
    family = KernelFamily(kernel)
    if family == KernelFamily.rbf and bandwidth is None:
        bandwidth = rbf_bandwidth_heuristic(X)
    report = None
    if cv:
        report = grid_search_cv(
            X, T, graph, penalty, family, beta, cv_config(folds, alpha_grid, gamma_grid, seed), bandwidth
        )
        alpha, gamma = report.best_alpha, report.best_gamma
    kernel_spec = KernelSpec(
        family=family, gamma=gamma, bandwidth=bandwidth if family == KernelFamily.rbf else None
    )
    artifact = ModelArtifact(
        inputs=X,
        targets=T,
        adjacency=adjacency,
        directed=directed,
        profile=profile_spec,
        alpha=alpha,
        beta=beta,
        kernel=kernel_spec,
        standardization=transform,
    )
    model = artifact.build(cache_timeout=cache_timeout)
    model_path = model_path or settings.path("model.json")
    artifact.save(model_path)
    summary = {
        "M": model.num_nodes,
        "N": model.num_inputs,
        "alpha": alpha,
        "gamma": gamma,
        "beta": beta,
        "bandwidth": bandwidth,
        "kernel": family.value,
        "trace_gpg": marginal_trace(model),
        "trace_conventional": conventional_marginal_trace(model),
        "model": model_path,
    }
    if report is not None:
        summary["cv"] = report.to_dict()
    echo_json(summary)


@main.command()
@click.option("--model", "model_path", required=True, help="Model file written by fit")
@click.option("--query", required=True, help="Query inputs CSV, one input per row")
@click.option("--out", help="Predictions CSV, defaults to <output-dir>/predictions.csv")
@click.option("--with-variance", is_flag=True, help="Append the M predictive variances")
@click.option("--full-cov", is_flag=True, help="Append the M x M covariance, row major")
@cache_option
@pass_settings
@handle_errors
def predict(settings, model_path, query, out, with_variance, full_cov, cache_timeout):
    """Predict targets for query inputs."""
    artifact = ModelArtifact.load(model_path)
    model = artifact.build(cache_timeout=cache_timeout)
    X_new = artifact.prepare_inputs(read_matrix(query))
    rows = []
    for dist in predict_batch(model, X_new):
        row = [dist.mean]
        if with_variance:
            row.append(dist.variance)
        if full_cov:
            row.append(dist.covariance.ravel())
        rows.append(numpy.concatenate(row))
    out = out or settings.path("predictions.csv")
    write_matrix(out, numpy.vstack(rows))
    logger.info("Wrote %d predictions to %s", len(rows), out)


@main.command()
@click.option("--inputs", required=True, help="Inputs CSV, N rows x d columns")
@click.option("--targets", required=True, help="Targets CSV, N rows x M columns")
@click.option("--graph", "graph_path", required=True, help="Adjacency CSV, M x M")
@click.option("--directed", is_flag=True, help="Treat the adjacency as a directed graph")
@click.option("--profile", default="laplacian", show_default=True, help="Spectral penalty profile")
@click.option("--kernel", type=click.Choice([k.value for k in KernelFamily]), default="rbf", show_default=True)
@click.option("--beta", type=float, required=True, help="Noise precision")
@click.option("--bandwidth", type=float, help="RBF bandwidth, defaults to the input heuristic")
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--alpha-grid", callback=parse_floats, help="Comma separated alpha values")
@click.option("--gamma-grid", callback=parse_floats, help="Comma separated gamma values")
@click.option("--seed", type=int, default=0, show_default=True, help="Fold shuffling seed")
@click.option("--standardize", "scale", is_flag=True, help="Z-score the input features")
@click.option("--log10", is_flag=True, help="Model log10 of the targets")
@cache_option
@handle_errors
def cv(
    inputs,
    targets,
    graph_path,
    directed,
    profile,
    kernel,
    beta,
    bandwidth,
    folds,
    alpha_grid,
    gamma_grid,
    seed,
    scale,
    log10,
    cache_timeout,
):
    """Cross-validate alpha and gamma and print the report as JSON."""
    X, T, _ = load_inputs(inputs, targets, log10, scale)
    graph, penalty, _ = load_penalty(graph_path, directed, parse_profile(profile), cache_timeout)
    family = KernelFamily(kernel)
    if family == KernelFamily.rbf and bandwidth is None:
        bandwidth = rbf_bandwidth_heuristic(X)
    report = grid_search_cv(
        X, T, graph, penalty, family, beta, cv_config(folds, alpha_grid, gamma_grid, seed), bandwidth
    )
    echo_json(report.to_dict())


# =====================================================================================
# Experiment commands
# =====================================================================================
@main.command()
@click.option("--inputs", help="Inputs CSV")
@click.option("--targets", help="Targets CSV, used as the clean reference unless --clean is given")
@click.option("--clean", help="Clean targets CSV")
@click.option("--graph", "graph_path", help="Adjacency CSV")
@click.option("--synth", is_flag=True, help="Benchmark on generated data instead of files")
@click.option("--nodes", type=int, default=40, show_default=True, help="Synthetic graph size")
@click.option("--samples", type=int, default=100, show_default=True, help="Synthetic sample count")
@click.option("--input-dim", type=int, default=3, show_default=True)
@click.option("--alpha-gen", type=float, default=10.0, show_default=True, help="Synthetic smoothing")
@click.option("--synth-mode", type=click.Choice([m.value for m in SynthMode]), default="latent", show_default=True)
@click.option(
    "--methods",
    default=",".join(m.value for m in Method),
    show_default=True,
    help="Comma separated subset of gp-l, gpg-l, gp-k, gpg-k",
)
@click.option("--train-sizes", callback=parse_ints, default="5,10,20", show_default=True)
@click.option("--snr-db", type=float, default=0.0, show_default=True)
@click.option("--trials", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--train-frac", type=float, default=0.5, show_default=True)
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--alpha-grid", callback=parse_floats, help="Comma separated alpha values")
@click.option("--gamma-grid", callback=parse_floats, help="Comma separated gamma values")
@click.option("--cv-once", is_flag=True, help="Tune on the first trial only and reuse the values")
@click.option("--standardize", "scale", is_flag=True, help="Z-score the input features per trial")
@click.option("--log10", is_flag=True, help="Model log10 of the targets")
@click.option(
    "--scheduler",
    default="threads",
    envvar="GPGRAPH_SCHEDULER",
    show_default=True,
    help="Dask scheduler for trials, defaults to GPGRAPH_SCHEDULER env",
)
@click.option("--out", help="Results JSON, defaults to <output-dir>/bench.json")
@click.option("--csv", "csv_path", help="Also write the results as headerless CSV")
@pass_settings
@handle_errors
def bench(
    settings,
    inputs,
    targets,
    clean,
    graph_path,
    synth,
    nodes,
    samples,
    input_dim,
    alpha_gen,
    synth_mode,
    methods,
    train_sizes,
    snr_db,
    trials,
    seed,
    train_frac,
    folds,
    alpha_grid,
    gamma_grid,
    cv_once,
    scale,
    log10,
    scheduler,
    out,
    csv_path,
):
    """Compare GP and GPG methods over Monte-Carlo trials."""
    if synth:
        graph, dataset = synthetic_problem(nodes, samples, input_dim, alpha_gen, synth_mode, seed)
    elif inputs and targets and graph_path:
        dataset = load_dataset(inputs, targets, clean)
        graph = load_adjacency(graph_path)
    else:
        raise click.UsageError("Give --inputs, --targets and --graph, or --synth")
    if log10:
        dataset = dataset.log10()
    spec = BenchmarkSpec(
        methods=[m.strip() for m in methods.split(",") if m.strip()],
        train_sizes=train_sizes,
        snr_db=snr_db,
        trials=trials,
        seed=seed,
        train_frac=train_frac,
        cv=cv_config(folds, alpha_grid, gamma_grid, seed),
        cv_mode=CvMode.once if cv_once else CvMode.per_trial,
        standardize=scale,
    )
    results = run_benchmark(dataset, graph, spec, scheduler=scheduler)
    out = out or settings.path("bench.json")
    with fsspec.open(out, "wb") as f:
        f.write(results.to_json())
    if csv_path:
        results.to_csv(csv_path)
    click.echo(str(results), err=True)


@main.command()
@click.option("--nodes", type=int, default=40, show_default=True)
@click.option("--samples", type=int, default=100, show_default=True)
@click.option("--input-dim", type=int, default=3, show_default=True)
@click.option("--alpha-gen", type=float, default=10.0, show_default=True)
@click.option("--mode", type=click.Choice([m.value for m in SynthMode]), default="latent", show_default=True)
@click.option("--snr-db", type=float, help="Add noise to the targets at this SNR")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", help="Output directory, defaults to --output-dir")
@pass_settings
@handle_errors
def synth(settings, nodes, samples, input_dim, alpha_gen, mode, snr_db, seed, out_dir):
    """Generate a synthetic graph and smooth dataset."""
    graph, dataset = synthetic_problem(nodes, samples, input_dim, alpha_gen, mode, seed)
    if snr_db is not None:
        noisy, beta = add_noise_snr(dataset.clean_targets, snr_db, [seed, 1])
        dataset = Dataset(
            inputs=dataset.inputs,
            targets=noisy,
            clean_targets=dataset.clean_targets,
            meta={**dataset.meta, "snr_db": repr(snr_db), "beta": repr(beta)},
        )
    out_dir = out_dir or settings.output_dir
    paths = save_dataset(dataset, out_dir)
    write_matrix(os.path.join(out_dir, "adjacency.csv"), graph.adjacency)
    click.echo(f"Wrote {', '.join(sorted(paths))} and adjacency to {out_dir}", err=True)


if __name__ == "__main__":
    main()
