# models/graph.py
#
# This module defines the SpatialGraph and GraphParams data classes.
# The graph is the symmetric k-NN superpixel graph; the dense weight matrix is the
# canonical storage and the edge list is derived from its upper triangle.
#
# Usage: Built by core.graph_builder.build_knn_graph, consumed by the models and the loss.
#
# Helper modules: Uses dataclasses and numpy.

from dataclasses import dataclass

import numpy as np

from core.errors import ConfigError, DataError


@dataclass(frozen=True)
class GraphParams:
    """
    Kernel and neighbourhood parameters of the superpixel graph.

    Attributes:
        beta (float): Balance between mean and weighted feature distances.
        sigma_s (float): Feature kernel width.
        sigma_l (float): Location kernel width (centroids scaled to [0, 1]).
        knn (int): Neighbour count K.
    """
    beta: float = 0.9
    sigma_s: float = 0.20
    sigma_l: float = 0.20
    knn: int = 8

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("graph.beta must lie in [0, 1]")
        if self.sigma_s <= 0 or self.sigma_l <= 0:
            raise ConfigError("graph sigmas must be > 0")
        if int(self.knn) < 1:
            raise ConfigError("graph.knn must be >= 1")

    def to_dict(self):
        return {"beta": self.beta, "sigma_s": self.sigma_s, "sigma_l": self.sigma_l, "knn": int(self.knn)}


@dataclass(frozen=True, eq=False)
class SpatialGraph:
    """
    Weighted undirected superpixel graph.

    Attributes:
        A (np.ndarray): n x n symmetric non-negative weight matrix with zero diagonal.
    """
    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64, order="C")
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DataError("adjacency must be square")
        if not np.array_equal(A, A.T):
            raise DataError("adjacency must be symmetric")
        if np.any(np.diag(A) != 0) or np.any(A < 0):
            raise DataError("adjacency must be non-negative with a zero diagonal")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def n(self):
        return self.A.shape[0]

    def edges(self):
        """Undirected edges as an (m, 2) array of (i, j) with i < j, row-major order."""
        i, j = np.nonzero(np.triu(self.A, k=1))
        return np.stack([i, j], axis=1)

    def weights(self):
        e = self.edges()
        return self.A[e[:, 0], e[:, 1]]

    def degrees(self):
        """Number of incident edges per node."""
        return np.count_nonzero(self.A, axis=1)
