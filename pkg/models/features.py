# models/features.py
#
# This module defines the superpixel feature tables and the seed-label matrix.
#
# Usage: SuperpixelFeatures is built by core.features.extract_features and consumed by
# the graph builder; SeedLabels is built by core.features.seed_labels and consumed by
# the training loss.
#
# Helper modules: Uses dataclasses and numpy.

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.errors import DataError


@dataclass(frozen=True, eq=False)
class SuperpixelFeatures:
    """
    Per-superpixel descriptors.

    Attributes:
        mean (np.ndarray): n x d mean feature vectors.
        weighted (np.ndarray): n x d neighbour-weighted feature vectors.
        centroid (np.ndarray): n x 2 mean pixel coordinates (row, col).
        adjacency (Tuple[frozenset, ...]): 4-connected neighbour id sets per superpixel.
        h (float): Softmax kernel used for the weighted features.
        image_shape (Tuple[int, int]): (height, width) of the segmented image.
    """
    mean: np.ndarray
    weighted: np.ndarray
    centroid: np.ndarray
    adjacency: Tuple[frozenset, ...]
    h: float
    image_shape: Tuple[int, int]

    def __post_init__(self):
        n = self.mean.shape[0]
        if self.weighted.shape != self.mean.shape or self.centroid.shape != (n, 2) or len(self.adjacency) != n:
            raise DataError("feature tables disagree on the superpixel count")

    @property
    def n(self):
        return self.mean.shape[0]

    @property
    def d(self):
        return self.mean.shape[1]

    def normalized_centroids(self):
        """Centroids divided by max(height, width), so both coordinates lie in [0, 1]."""
        return self.centroid / float(max(self.image_shape))


@dataclass(frozen=True, eq=False)
class SeedLabels:
    """
    Seed label matrix Y.

    Attributes:
        Y (np.ndarray): n x c matrix; each row is one-hot or all zero.
        train_mask (np.ndarray): n booleans, true exactly for the non-zero rows.
    """
    Y: np.ndarray
    train_mask: np.ndarray

    def __post_init__(self):
        if self.Y.ndim != 2 or self.train_mask.shape != (self.Y.shape[0],):
            raise DataError("seed matrix and train mask disagree on the superpixel count")
        row_sums = self.Y.sum(axis=1)
        if not np.all((row_sums == 0) | (row_sums == 1)) or not np.array_equal(row_sums > 0, self.train_mask):
            raise DataError("seed rows must be one-hot exactly on the train mask")

    @property
    def n(self):
        return self.Y.shape[0]

    @property
    def c(self):
        return self.Y.shape[1]

    def seed_classes(self):
        """Class ids 1..c of the seeded superpixels (0 for unseeded)."""
        return np.where(self.train_mask, self.Y.argmax(axis=1) + 1, 0)
