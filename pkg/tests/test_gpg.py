import numpy
import pytest

from gpgraph.arrays import vec
from gpgraph.exceptions import DataError, DimensionError, OracleCapError, ParameterError
from gpgraph.gp import (
    KernelSpec,
    conventional_marginal_trace,
    fit,
    fit_operator,
    kernel_matrix,
    marginal_trace,
    mean_spectrum,
    predict,
    predict_batch,
    predict_conventional,
    predict_mean,
    predict_naive,
    shrinkage_factors,
)
from gpgraph.graph import Graph, directed_smoothing_operator, igft, make_penalty

from .utils import empty_graph, random_graph, relerr


def make_instance(rng, m, n, family="rbf", d=2):
    graph = random_graph(rng, m)
    X = rng.standard_normal((n, d))
    T = rng.standard_normal((n, m))
    kernel = KernelSpec(
        family=family,
        gamma=float(rng.uniform(0.5, 2.0)),
        bandwidth=float(rng.uniform(1.0, 4.0)) if family == "rbf" else None,
    )
    return graph, X, T, kernel


def assert_same_distribution(a, b, tol):
    assert relerr(a.mean, b.mean) <= tol
    assert relerr(a.covariance, b.covariance) <= tol


def test_oracle_equivalence(rng):
    for trial in range(200):
        m = int(rng.integers(2, 11))
        n = int(rng.integers(1, 16))
        family = "rbf" if trial % 2 else "linear"
        graph, X, T, kernel = make_instance(rng, m, n, family)
        if trial % 4 < 2:
            graph = random_graph(rng, m, connected=False, density=0.2)
        alpha = float(rng.choice([0.0, 0.1, 1.0, 10.0]))
        beta = float(rng.uniform(1.0, 20.0))
        model = fit(X, T, graph.spectrum, None, kernel, alpha, beta)
        x_new = rng.standard_normal(2)
        assert_same_distribution(predict(model, x_new), predict_naive(model, x_new), 1e-8)


def test_oracle_equivalence_fixed_instance(rng):
    graph, X, T, _ = make_instance(rng, 4, 5)
    kernel = KernelSpec(family="rbf", gamma=1.0, bandwidth=2.0)
    model = fit(X, T, graph.spectrum, None, kernel, 1.5, 10.0)
    for x_new in rng.standard_normal((3, 2)):
        assert_same_distribution(predict(model, x_new), predict_naive(model, x_new), 1e-8)


def test_band_profile_matches_oracle(rng):
    graph, X, T, kernel = make_instance(rng, 6, 7)
    penalty = make_penalty(graph.spectrum, {"kind": "band_select", "band": [0, 1], "weight": 3.0})
    model = fit(X, T, graph.spectrum, penalty, kernel, 2.0, 5.0)
    x_new = rng.standard_normal(2)
    assert_same_distribution(predict(model, x_new), predict_naive(model, x_new), 1e-8)


def test_directed_operator_matches_oracle(rng):
    adjacency = rng.uniform(size=(5, 5)) * (rng.uniform(size=(5, 5)) < 0.6)
    numpy.fill_diagonal(adjacency, 0.0)
    adjacency[0, 1] = 1.0
    smoothing = directed_smoothing_operator(adjacency, 2.0)
    X = rng.standard_normal((6, 2))
    T = rng.standard_normal((6, 5))
    kernel = KernelSpec(family="rbf", gamma=1.0, bandwidth=2.0)
    model = fit_operator(X, T, smoothing, kernel, 4.0)
    x_new = rng.standard_normal(2)
    assert_same_distribution(predict(model, x_new), predict_naive(model, x_new), 1e-8)


def collapse_instances(rng, count=50):
    for index in range(count):
        family = "rbf" if index % 2 == 0 else "linear"
        m = int(rng.integers(2, 11))
        n = int(rng.integers(1, 13))
        graph, X, T, kernel = make_instance(rng, m, n, family)
        beta = float(rng.uniform(1.0, 20.0))
        yield graph, X, T, kernel, beta, rng.standard_normal(2)


def test_alpha_zero_is_conventional(rng):
    for graph, X, T, kernel, beta, x_new in collapse_instances(rng):
        model = fit(X, T, graph.spectrum, None, kernel, 0.0, beta)
        conventional = predict_conventional(X, T, kernel, beta, x_new)
        assert_same_distribution(predict(model, x_new), conventional, 1e-10)
        assert_same_distribution(predict_naive(model, x_new), conventional, 1e-10)


def test_empty_graph_is_conventional(rng):
    for graph, X, T, kernel, beta, x_new in collapse_instances(rng):
        empty = empty_graph(graph.num_nodes)
        conventional = predict_conventional(X, T, kernel, beta, x_new)
        for alpha in [0.1, 1.0, 10.0]:
            model = fit(X, T, empty.spectrum, None, kernel, alpha, beta)
            flat = fit(X, T, graph.spectrum, None, kernel, 0.0, beta)
            assert_same_distribution(predict(model, x_new), conventional, 1e-10)
            assert_same_distribution(predict(model, x_new), predict(flat, x_new), 1e-10)
            assert marginal_trace(model) == pytest.approx(conventional_marginal_trace(model), rel=1e-12)


def test_conventional_is_per_node_scalar_gp(rng):
    X = rng.standard_normal((7, 3))
    T = rng.standard_normal((7, 3))
    kernel = KernelSpec(family="rbf", gamma=1.0, bandwidth=2.5)
    x_new = rng.standard_normal(3)
    result = predict_conventional(X, T, kernel, 8.0, x_new)
    K = kernel_matrix(kernel, X)
    k = numpy.exp(-numpy.sum((X - x_new) ** 2, axis=1) / 2.5)
    C = K + numpy.eye(7) / 8.0
    for node in range(3):
        assert result.mean[node] == pytest.approx(k @ numpy.linalg.solve(C, T[:, node]), rel=1e-10, abs=1e-12)
    variance = 1.0 + 1.0 / 8.0 - k @ numpy.linalg.solve(C, k)
    assert numpy.allclose(result.variance, variance, rtol=1e-10)
    assert numpy.count_nonzero(result.covariance - numpy.diag(numpy.diag(result.covariance))) == 0


def test_single_node_interpolation():
    graph = Graph(adjacency=[[0.0]])
    X = numpy.full((3, 1), 0.4)
    T = numpy.full((3, 1), 2.5)
    kernel = KernelSpec(family="rbf", gamma=1.0, bandwidth=1.0)
    errors = []
    for beta in [1.0, 10.0, 1e3, 1e6]:
        model = fit(X, T, graph.spectrum, None, kernel, 1.0, beta)
        errors.append(abs(predict(model, [0.4]).mean[0] - 2.5))
    assert errors == sorted(errors, reverse=True)
    assert errors[-1] <= 1e-4


def test_eta_bounds(rng):
    graph, X, T, kernel = make_instance(rng, 6, 9)
    beta = 4.0
    model = fit(X, T, graph.spectrum, None, kernel, 3.0, beta)
    assert numpy.all(model.eta > 0)
    assert numpy.all(model.eta <= beta * (1 + 1e-12))
    flat = fit(X, T, graph.spectrum, None, kernel, 0.0, beta)
    assert numpy.array_equal(flat.eta, numpy.tile(flat.eta[0], (6, 1)))
    assert numpy.allclose(flat.eta[0], 1.0 / (flat.kernel_eigenvalues + 1.0 / beta), rtol=1e-14)


def test_covariance_reconstruction(rng):
    graph, X, T, kernel = make_instance(rng, 2, 3)
    model = fit(X, T, graph.spectrum, None, kernel, 1.0, 2.0)
    C = numpy.kron(model.smoothing.b_squared, kernel_matrix(kernel, X)) + numpy.eye(6) / 2.0
    Z = numpy.kron(model.smoothing.basis, model.kernel_basis)
    spectral = (Z / model.eta.ravel()) @ Z.T
    assert relerr(spectral, C) <= 1e-8
    assert numpy.allclose(numpy.sort(1.0 / model.eta.ravel()), numpy.linalg.eigvalsh(C), rtol=1e-10)
    assert relerr(model.rho.ravel(), Z.T @ vec(T)) <= 1e-12
    assert marginal_trace(model) == pytest.approx(numpy.trace(C), rel=1e-12)


def test_conventional_marginal_trace(rng):
    graph, X, T, kernel = make_instance(rng, 3, 4)
    model = fit(X, T, graph.spectrum, None, kernel, 1.0, 2.0)
    K = kernel_matrix(kernel, X)
    assert conventional_marginal_trace(model) == pytest.approx(3 * numpy.trace(K) + 12 / 2.0, rel=1e-12)


def test_predictive_covariance_psd(rng):
    for _ in range(20):
        graph, X, T, kernel = make_instance(rng, int(rng.integers(2, 8)), int(rng.integers(1, 8)))
        model = fit(X, T, graph.spectrum, None, kernel, float(rng.uniform(0, 10)), 10.0)
        result = predict(model, rng.standard_normal(2))
        covariance = result.covariance
        assert numpy.array_equal(covariance, covariance.T)
        assert numpy.linalg.eigvalsh(covariance).min() >= -1e-8 * numpy.linalg.norm(covariance, 2)
        assert numpy.all(result.variance > 0)


def test_oracle_cap(rng):
    graph, X, T, kernel = make_instance(rng, 3, 2)
    model = fit(X, T, graph.spectrum, None, kernel, 1.0, 1.0)
    with pytest.raises(OracleCapError):
        predict_naive(model, X[0], cap=5)
    predict_naive(model, X[0], cap=6)


def test_mean_spectrum(rng):
    graph, X, T, kernel = make_instance(rng, 7, 6)
    x_new = rng.standard_normal(2)
    model = fit(X, T, graph.spectrum, None, kernel, 2.0, 5.0)
    coefficients = mean_spectrum(model, x_new)
    assert relerr(igft(graph.spectrum, coefficients), predict(model, x_new).mean) <= 1e-8
    flat = fit(X, T, graph.spectrum, None, kernel, 0.0, 5.0)
    conventional = predict_conventional(X, T, kernel, 5.0, x_new)
    assert relerr(mean_spectrum(flat, x_new), graph.spectrum.basis.T @ conventional.mean) <= 1e-10


def test_shrinkage_factors(rng):
    graph, X, T, kernel = make_instance(rng, 6, 5)
    beta = 5.0
    model = fit(X, T, graph.spectrum, None, kernel, 4.0, beta)
    factors = shrinkage_factors(model)
    bt = beta * model.kernel_eigenvalues
    conventional = bt / (bt + 1.0)
    assert factors.shape == (6, 5)
    assert numpy.all(factors <= conventional + 1e-15)
    # connected graph: the constant frequency carries no penalty
    assert numpy.allclose(factors[0], conventional, rtol=1e-10)
    flat = fit(X, T, graph.spectrum, None, kernel, 0.0, beta)
    assert numpy.allclose(shrinkage_factors(flat), numpy.tile(conventional, (6, 1)), rtol=1e-14)


def test_batch_prediction(rng):
    graph, X, T, kernel = make_instance(rng, 4, 6)
    model = fit(X, T, graph.spectrum, None, kernel, 1.0, 3.0)
    X_new = rng.standard_normal((3, 2))
    batch = predict_batch(model, X_new)
    means = predict_mean(model, X_new)
    assert len(batch) == 3
    assert means.shape == (3, 4)
    for q, x in enumerate(X_new):
        single = predict(model, x)
        assert numpy.array_equal(batch[q].mean, single.mean)
        assert relerr(means[q], single.mean) <= 1e-10


def test_fit_errors(rng):
    graph, X, T, kernel = make_instance(rng, 3, 4)
    with pytest.raises(DimensionError):
        fit(X, T[:, :2], graph.spectrum, None, kernel, 1.0, 1.0)
    with pytest.raises(DimensionError):
        fit(X[:3], T, graph.spectrum, None, kernel, 1.0, 1.0)
    bad = T.copy()
    bad[1, 1] = numpy.inf
    with pytest.raises(DataError):
        fit(X, bad, graph.spectrum, None, kernel, 1.0, 1.0)
    with pytest.raises(ParameterError):
        fit(X, T, graph.spectrum, None, kernel, 1.0, 0.0)
    with pytest.raises(ParameterError):
        fit(X, T, graph.spectrum, None, kernel, -1.0, 1.0)
    model = fit(X, T, graph.spectrum, None, kernel, 1.0, 1.0)
    with pytest.raises(DimensionError):
        predict(model, [0.0, 1.0, 2.0])
