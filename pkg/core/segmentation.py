# segmentation.py
#
# This module implements graph-based superpixel segmentation on the reduced cube.
# Pixels are nodes of an 8-connected grid graph weighted by the Euclidean distance of their
# (optionally Gaussian-smoothed) feature vectors. Edges are visited in ascending weight and two
# components merge when the edge weight does not exceed either component's internal difference
# plus k/|C|. A second pass merges components smaller than min_size along their lightest edges.
#
# Usage: felzenszwalb_segment(reduced, SegmentationParams(min_size=...)) from the pipeline runner.
#
# Helper modules: Uses numpy for edge construction, scipy.ndimage for pre-smoothing.

import logging
import math

import numpy as np
from scipy import ndimage

from core.errors import ConfigError, DataError
from models.segmentation import Segmentation

logger = logging.getLogger(__name__)


class DisjointSet:
    """
    Union-find forest over pixel ids with union by rank and path halving.
    Tracks component size and the internal difference Int(C) (largest merge weight).
    """

    def __init__(self, count):
        self.parent = list(range(count))
        self.rank = [0] * count
        self.size = [1] * count
        self.internal = [0.0] * count
        self.components = count

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b, weight=0.0):
        """Join the components rooted at a and b; returns the surviving root."""
        if self.rank[a] < self.rank[b]:
            a, b = b, a
        self.parent[b] = a
        if self.rank[a] == self.rank[b]:
            self.rank[a] += 1
        self.size[a] += self.size[b]
        self.internal[a] = max(self.internal[a], self.internal[b], weight)
        self.components -= 1
        return a

    def labels(self):
        return np.fromiter((self.find(i) for i in range(len(self.parent))), dtype=np.int64,
                           count=len(self.parent))


def grid_edges(height, width):
    """
    8-connected grid edges as an (m, 2) array of flat pixel ids, in construction order:
    right, down, down-right, down-left.
    """
    ids = np.arange(height * width, dtype=np.int64).reshape(height, width)
    right = np.stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()], axis=1)
    down = np.stack([ids[:-1, :].ravel(), ids[1:, :].ravel()], axis=1)
    down_right = np.stack([ids[:-1, :-1].ravel(), ids[1:, 1:].ravel()], axis=1)
    down_left = np.stack([ids[:-1, 1:].ravel(), ids[1:, :-1].ravel()], axis=1)
    return np.concatenate([right, down, down_right, down_left], axis=0)


def _smoothed(reduced, sigma):
    values = reduced.values
    if sigma <= 0:
        return values
    return ndimage.gaussian_filter(values, sigma=(sigma, sigma, 0.0), mode="nearest")


def edge_weights(values, edges):
    """Euclidean distance between the feature vectors at both ends of each edge."""
    pixels = values.reshape(-1, values.shape[2])
    diff = pixels[edges[:, 0]] - pixels[edges[:, 1]]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def default_scale_k(reduced, smoothing_sigma=0.8, multiplier=3.0):
    """scale_k = multiplier x the median 8-connected edge weight (1.0 for edgeless images)."""
    edges = grid_edges(reduced.height, reduced.width)
    if len(edges) == 0:
        return 1.0
    median = float(np.median(edge_weights(_smoothed(reduced, smoothing_sigma), edges)))
    return multiplier * median if median > 0 else 1.0


def relabel_first_occurrence(roots):
    """Map arbitrary component labels to 0..n-1 in row-major first-occurrence order."""
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse.ravel()]


def felzenszwalb_segment(reduced, params, scale_multiplier=3.0):
    """
    Segment a reduced cube into superpixels.

    Args:
        reduced (ReducedCube): Input features.
        params (SegmentationParams): min_size, scale_k (None derives it) and smoothing sigma.
        scale_multiplier (float): Median-weight multiplier used when scale_k is None.

    Returns:
        Segmentation with contiguous row-major ids.
    """
    height, width = reduced.height, reduced.width
    k = params.scale_k
    if k is None:
        k = default_scale_k(reduced, params.smoothing_sigma, scale_multiplier)
    min_size = int(params.min_size)

    edges = grid_edges(height, width)
    weights = edge_weights(_smoothed(reduced, params.smoothing_sigma), edges)
    order = np.argsort(weights, kind="stable")
    sorted_edges = edges[order].tolist()
    sorted_weights = weights[order].tolist()

    forest = DisjointSet(height * width)
    find = forest.find
    for (u, v), w in zip(sorted_edges, sorted_weights):
        a, b = find(u), find(v)
        if a == b:
            continue
        threshold = min(forest.internal[a] + k / forest.size[a], forest.internal[b] + k / forest.size[b])
        if w <= threshold:
            forest.union(a, b, w)

    if min_size > 1:
        for (u, v), w in zip(sorted_edges, sorted_weights):
            a, b = find(u), find(v)
            if a != b and (forest.size[a] < min_size or forest.size[b] < min_size):
                forest.union(a, b, w)

    labels = relabel_first_occurrence(forest.labels()).reshape(height, width)
    seg = Segmentation(labels, scale_k=float(k), min_size=min_size)
    logger.info("Segmented %dx%d image into %d superpixels (k=%.4g, min_size=%d)",
                height, width, seg.n, k, min_size)
    return seg


def target_min_size(height, width, target_nodes):
    """Rule-of-thumb minimum segment size: ceil(height * width / target_nodes)."""
    if target_nodes < 1:
        raise ConfigError("target_nodes must be >= 1")
    return int(math.ceil(height * width / target_nodes))


def boundary_mask(seg):
    """True where a 4-neighbour belongs to a different superpixel."""
    ids = seg.segment_id
    mask = np.zeros(ids.shape, dtype=bool)
    vertical = ids[1:, :] != ids[:-1, :]
    horizontal = ids[:, 1:] != ids[:, :-1]
    mask[1:, :] |= vertical
    mask[:-1, :] |= vertical
    mask[:, 1:] |= horizontal
    mask[:, :-1] |= horizontal
    return mask


def save_segmentation(seg, path):
    np.save(path, seg.segment_id.astype(np.int32))
    return path


def load_segmentation(path):
    ids = np.load(path, allow_pickle=False)
    if ids.ndim != 2:
        raise DataError(f"{path}: segmentation raster must be 2-D")
    return Segmentation(ids)
