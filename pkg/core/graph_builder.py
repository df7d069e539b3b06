# graph_builder.py
#
# This module builds the weighted symmetric k-NN superpixel graph.
# The similarity of two superpixels is the product of a feature kernel (mean and
# neighbour-weighted features, balanced by beta) and a location kernel on centroids scaled
# to [0, 1] by max(height, width). Each node keeps its K most similar partners and the edge
# set is the symmetric union of those choices.
#
# Usage: build_knn_graph(features, GraphParams()) from the pipeline runner.
#
# Helper modules: Uses numpy for the dense O(n^2) kernel evaluation and csv for edge export.

import csv
import logging

import numpy as np

from core.errors import DegenerateGraphError
from models.graph import SpatialGraph

logger = logging.getLogger(__name__)

_TINY = np.finfo(np.float64).tiny


def _squared_distances(x):
    sq = np.sum(x * x, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    d = 0.5 * (d + d.T)
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def log_pair_weights(features, params):
    """Natural log of w_ij for every pair (diagonal included, equal to 0)."""
    mean_term = _squared_distances(features.mean)
    weighted_term = _squared_distances(features.weighted)
    location_term = _squared_distances(features.normalized_centroids())
    log_s = ((params.beta - 1.0) * weighted_term - params.beta * mean_term) / params.sigma_s ** 2
    log_l = -location_term / params.sigma_l ** 2
    return log_s + log_l


def pair_weight(i, j, features, params):
    """w_ij = s_ij * l_ij for one pair of superpixels."""
    dw = np.sum((features.weighted[i] - features.weighted[j]) ** 2)
    dm = np.sum((features.mean[i] - features.mean[j]) ** 2)
    centroids = features.normalized_centroids()
    dl = np.sum((centroids[i] - centroids[j]) ** 2)
    s = np.exp(((params.beta - 1.0) * dw - params.beta * dm) / params.sigma_s ** 2)
    l = np.exp(-dl / params.sigma_l ** 2)
    return float(s * l)


def build_knn_graph(features, params):
    """
    Keep edge (i, j) iff i is among the K highest-weight partners of j or vice versa.
    Ties at the K boundary prefer the smaller node id. Weights are floored at the smallest
    positive double so every kept edge stays in (0, 1].
    """
    n = features.n
    if n < 2:
        raise DegenerateGraphError(f"a graph needs at least 2 superpixels, got {n}")
    log_w = log_pair_weights(features, params)
    k = min(int(params.knn), n - 1)
    ids = np.arange(n)
    keep = np.zeros((n, n), dtype=bool)
    for j in range(n):
        scores = log_w[j].copy()
        scores[j] = -np.inf
        ranked = np.lexsort((ids, -scores))
        ranked = ranked[ranked != j][:k]
        keep[j, ranked] = True
    keep |= keep.T
    weights = np.maximum(np.exp(log_w), _TINY)
    A = np.where(keep, weights, 0.0)
    np.fill_diagonal(A, 0.0)
    graph = SpatialGraph(A)
    degrees = graph.degrees()
    logger.info("Built %d-NN graph: %d nodes, %d edges, degree %d..%d", k, n, len(graph.edges()),
                degrees.min(), degrees.max())
    return graph


def normalized_adjacency(A):
    """GCN propagation matrix D~^-1/2 (A + I) D~^-1/2."""
    A_tilde = np.asarray(A, dtype=np.float64) + np.eye(len(A))
    inv_sqrt = 1.0 / np.sqrt(A_tilde.sum(axis=1))
    return inv_sqrt[:, None] * A_tilde * inv_sqrt[None, :]


def edge_list(graph):
    """Undirected (i, j, w) triples with i < j in row-major order."""
    edges = graph.edges()
    return [(int(i), int(j), float(graph.A[i, j])) for i, j in edges]


def write_edge_list_csv(graph, path):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["i", "j", "w"])
        for i, j, w in edge_list(graph):
            writer.writerow([i, j, repr(w)])
    return path


def lgc_objective(F, A, eps=1e-12):
    """
    Weighted smoothness 1/2 sum_ij W_ij ||F_i/sqrt(D_ii) - F_j/sqrt(D_jj)||^2 (diagnostic form).
    """
    A = np.asarray(A, dtype=np.float64)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(A.sum(axis=1), eps))
    G = F * inv_sqrt[:, None]
    sq = np.sum(G * G, axis=1)
    pairwise = sq[:, None] + sq[None, :] - 2.0 * (G @ G.T)
    return float(0.5 * np.sum(A * np.maximum(pairwise, 0.0)))
