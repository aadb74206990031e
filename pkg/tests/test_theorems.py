"""Variance reduction of the graph model against independent per-node GPs"""

import numpy
import pytest

from gpgraph.gp import (
    KernelSpec,
    conventional_marginal_trace,
    fit,
    kernel_eval,
    marginal_trace,
    predict,
    predict_conventional,
    predictive_trace_pair,
)

from .utils import empty_graph, path_graph, random_graph

ALPHAS = [0.1, 1.0, 10.0]


def sweep(rng, count=100):
    for _ in range(count):
        m = int(rng.integers(2, 13))
        n = int(rng.integers(1, 9))
        graph = random_graph(rng, m)
        X = rng.standard_normal((n, 2))
        T = rng.standard_normal((n, m))
        yield graph, X, T


@pytest.mark.parametrize("family", ["rbf", "linear"])
def test_marginal_trace_strictly_smaller(rng, family):
    for graph, X, T in sweep(rng):
        kernel = KernelSpec(family=family, gamma=1.0, bandwidth=2.0 if family == "rbf" else None)
        for alpha in ALPHAS:
            model = fit(X, T, graph.spectrum, None, kernel, alpha, 5.0)
            conventional = conventional_marginal_trace(model)
            assert conventional - marginal_trace(model) > 1e-10 * conventional


def test_marginal_trace_equal_without_graph(rng):
    kernel = KernelSpec(family="rbf", gamma=1.0, bandwidth=2.0)
    for graph, X, T in sweep(rng):
        flat = fit(X, T, graph.spectrum, None, kernel, 0.0, 5.0)
        assert marginal_trace(flat) == pytest.approx(conventional_marginal_trace(flat), rel=1e-10)
        empty = empty_graph(graph.num_nodes)
        for alpha in ALPHAS:
            model = fit(X, T, empty.spectrum, None, kernel, alpha, 5.0)
            assert marginal_trace(model) == pytest.approx(conventional_marginal_trace(model), rel=1e-10)


@pytest.mark.parametrize("family", ["rbf", "linear"])
def test_predictive_trace_strictly_smaller(rng, family):
    kernel = KernelSpec(family=family, gamma=1.0, bandwidth=2.0 if family == "rbf" else None)
    for graph, X, T in sweep(rng):
        x_new = rng.standard_normal(2)
        for alpha in ALPHAS:
            conventional, gpg = predictive_trace_pair(X, T, graph, None, kernel, alpha, 10.0, x_new)
            assert conventional - gpg > 1e-10 * conventional
            model = fit(X, T, graph.spectrum, None, kernel, alpha, 10.0)
            delta = predict_conventional(X, T, kernel, 10.0, x_new).covariance - predict(model, x_new).covariance
            assert numpy.linalg.eigvalsh(delta).min() >= -1e-8 * numpy.linalg.norm(delta, 2)


def test_predictive_trace_two_node_path(rng):
    kernel = KernelSpec(family="rbf", gamma=1.0, bandwidth=1.0)
    X = rng.standard_normal((4, 1))
    T = rng.standard_normal((4, 2))
    conventional, gpg = predictive_trace_pair(X, T, path_graph(2), None, kernel, 1.0, 10.0, [0.3])
    assert conventional > gpg


def test_predictive_trace_equal_without_graph(rng):
    kernel = KernelSpec(family="rbf", gamma=1.0, bandwidth=2.0)
    X = rng.standard_normal((6, 2))
    T = rng.standard_normal((6, 3))
    x_new = rng.standard_normal(2)
    conventional, gpg = predictive_trace_pair(X, T, random_graph(rng, 3), None, kernel, 0.0, 5.0, x_new)
    assert gpg == pytest.approx(conventional, rel=1e-10)
    for alpha in ALPHAS:
        conventional, gpg = predictive_trace_pair(X, T, empty_graph(3), None, kernel, alpha, 5.0, x_new)
        assert gpg == pytest.approx(conventional, rel=1e-10)


def test_traces_non_increasing_in_alpha(rng):
    kernel = KernelSpec(family="rbf", gamma=0.5, bandwidth=3.0)
    graph = random_graph(rng, 8)
    X = rng.standard_normal((10, 2))
    T = rng.standard_normal((10, 8))
    x_new = rng.standard_normal(2)
    marginal, predictive = [], []
    for alpha in [0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0]:
        model = fit(X, T, graph.spectrum, None, kernel, alpha, 5.0)
        marginal.append(marginal_trace(model))
        predictive.append(predict(model, x_new).trace)
    for values in (marginal, predictive):
        assert all(b <= a * (1 + 1e-12) for a, b in zip(values, values[1:]))


def test_shrinkage_factor_monotone():
    growth = 1.0 + numpy.linspace(0.0, 50.0, 201)
    for bt in [1e-3, 0.1, 1.0, 10.0, 1e4]:
        factor = bt / (bt + growth**2)
        assert numpy.all(numpy.diff(factor) <= 0)
        assert factor[0] == pytest.approx(bt / (bt + 1.0))


def test_posterior_trace_below_prior(rng):
    kernel = KernelSpec(family="rbf", gamma=1.0, bandwidth=2.0)
    for graph, X, T in sweep(rng, 20):
        beta = float(rng.uniform(0.5, 50.0))
        alpha = float(rng.uniform(0.0, 10.0))
        model = fit(X, T, graph.spectrum, None, kernel, alpha, beta)
        x_new = rng.standard_normal(2)
        prior = kernel_eval(kernel, x_new, x_new) * model.smoothing.b_squared + numpy.eye(graph.num_nodes) / beta
        assert predict(model, x_new).trace <= numpy.trace(prior) * (1 + 1e-12)
