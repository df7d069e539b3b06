import numpy as np
import pytest

from core.errors import ConfigError, DataError, DegenerateGraphError
from core.graph_builder import (build_knn_graph, edge_list, lgc_objective, log_pair_weights, normalized_adjacency,
                                pair_weight, write_edge_list_csv)
from models.features import SuperpixelFeatures
from models.graph import GraphParams, SpatialGraph


def random_features(rng, n=30, d=4, size=20):
    mean = rng.random((n, d))
    return SuperpixelFeatures(mean=mean, weighted=mean + 0.1 * rng.random((n, d)),
                              centroid=rng.uniform(0, size - 1, size=(n, 2)),
                              adjacency=tuple(frozenset() for _ in range(n)), h=15.0, image_shape=(size, size))


def permuted(features, perm):
    return SuperpixelFeatures(mean=features.mean[perm], weighted=features.weighted[perm],
                              centroid=features.centroid[perm], adjacency=features.adjacency,
                              h=features.h, image_shape=features.image_shape)


def test_graph_is_symmetric_with_bounded_degrees(rng):
    features = random_features(rng)
    params = GraphParams(knn=3)
    graph = build_knn_graph(features, params)
    np.testing.assert_array_equal(graph.A, graph.A.T)
    assert np.all(np.diag(graph.A) == 0)
    degrees = graph.degrees()
    assert degrees.min() >= 3
    assert len(graph.edges()) <= 3 * features.n
    assert degrees.mean() <= 2 * 3
    assert np.all((graph.weights() > 0) & (graph.weights() <= 1))


def test_every_node_has_a_neighbour_when_k_exceeds_the_graph(rng):
    features = random_features(rng, n=4)
    graph = build_knn_graph(features, GraphParams(knn=8))
    np.testing.assert_array_equal(graph.degrees(), [3, 3, 3, 3])
    assert graph.degrees().min() >= 1


def test_each_node_keeps_its_strongest_partners(rng):
    features = random_features(rng, n=12)
    params = GraphParams(knn=2)
    graph = build_knn_graph(features, params)
    log_w = log_pair_weights(features, params)
    for j in range(features.n):
        scores = log_w[j].copy()
        scores[j] = -np.inf
        for i in np.argsort(-scores)[:2]:
            assert graph.A[i, j] > 0


def test_weights_match_pairwise_formula(rng):
    features = random_features(rng, n=10)
    params = GraphParams(knn=9, sigma_s=1.0, sigma_l=1.0)
    graph = build_knn_graph(features, params)
    for i, j, w in edge_list(graph):
        assert w == pytest.approx(pair_weight(i, j, features, params), rel=1e-9)
    assert len(graph.edges()) == 10 * 9 // 2


def test_permuting_nodes_permutes_the_graph(rng):
    features = random_features(rng)
    perm = rng.permutation(features.n)
    params = GraphParams(knn=4)
    A = build_knn_graph(features, params).A
    A_perm = build_knn_graph(permuted(features, perm), params).A
    np.testing.assert_array_equal(A_perm > 0, A[np.ix_(perm, perm)] > 0)
    np.testing.assert_allclose(A_perm, A[np.ix_(perm, perm)], rtol=1e-10)


def test_ties_prefer_smaller_ids():
    n = 5
    features = SuperpixelFeatures(mean=np.zeros((n, 1)), weighted=np.zeros((n, 1)), centroid=np.zeros((n, 2)),
                                  adjacency=tuple(frozenset() for _ in range(n)), h=15.0, image_shape=(4, 4))
    A = build_knn_graph(features, GraphParams(knn=1)).A
    assert A[0, 1] == 1.0
    for j in range(1, n):
        assert A[0, j] == 1.0
    assert np.count_nonzero(A) == 2 * (n - 1)


def test_degenerate_and_invalid_inputs(rng):
    with pytest.raises(DegenerateGraphError):
        build_knn_graph(random_features(rng, n=1), GraphParams())
    with pytest.raises(ConfigError):
        GraphParams(beta=1.5)
    with pytest.raises(ConfigError):
        GraphParams(knn=0)
    with pytest.raises(DataError):
        SpatialGraph(np.array([[0.0, 1.0], [0.5, 0.0]]))
    with pytest.raises(DataError):
        SpatialGraph(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_normalized_adjacency(planted_graph):
    A_hat = normalized_adjacency(planted_graph)
    np.testing.assert_allclose(A_hat, A_hat.T)
    eigenvalues = np.linalg.eigvalsh(A_hat)
    assert eigenvalues.max() == pytest.approx(1.0)
    np.testing.assert_allclose(normalized_adjacency(np.zeros((3, 3))), np.eye(3))


def test_lgc_objective(planted_graph):
    d = planted_graph.sum(axis=1)
    constant = np.sqrt(d)[:, None] * np.ones((8, 2))
    assert lgc_objective(constant, planted_graph) == pytest.approx(0.0, abs=1e-12)
    F = np.zeros((8, 1))
    F[0] = 1.0
    expected = 0.5 * 2 * sum(planted_graph[0, j] * (1.0 / np.sqrt(d[0])) ** 2 for j in range(1, 8))
    assert lgc_objective(F, planted_graph) == pytest.approx(expected)


def test_edge_csv(tmp_path, planted_graph):
    path = write_edge_list_csv(SpatialGraph(planted_graph), str(tmp_path / "edges.csv"))
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[0] == "i,j,w"
    assert len(lines) == 1 + 13
    assert "3,4,0.1" in lines
