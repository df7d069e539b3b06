# features.py
#
# This module computes per-superpixel descriptors: 4-connected adjacency, mean feature
# vectors, neighbour-weighted feature vectors (softmax over negative squared distances),
# centroids, and the seed label matrix used by the supervised loss.
#
# Usage: extract_features(seg, reduced, h) then seed_labels(seg, gt, sampled_mask).
#
# Helper modules: Uses numpy and scipy.special.softmax.

import logging

import numpy as np
from scipy.special import softmax

from core.errors import DataError
from models.features import SeedLabels, SuperpixelFeatures

logger = logging.getLogger(__name__)


def compute_adjacency(seg):
    """
    Neighbour sets: i and j are adjacent iff some pixel of S_i has a 4-neighbour in S_j (i != j).
    """
    ids = seg.segment_id
    a = np.concatenate([ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    b = np.concatenate([ids[:, 1:].ravel(), ids[1:, :].ravel()])
    differ = a != b
    pairs = np.stack([np.minimum(a[differ], b[differ]), np.maximum(a[differ], b[differ])], axis=1)
    neighbours = [set() for _ in range(seg.n)]
    if len(pairs) == 0:
        return tuple(frozenset() for _ in neighbours)
    for i, j in np.unique(pairs, axis=0).tolist():
        neighbours[i].add(j)
        neighbours[j].add(i)
    return tuple(frozenset(s) for s in neighbours)


def _segment_sums(seg, values):
    ids = seg.segment_id.ravel()
    flat = values.reshape(len(ids), -1)
    return np.stack([np.bincount(ids, weights=flat[:, j], minlength=seg.n) for j in range(flat.shape[1])],
                    axis=1)


def compute_mean(seg, reduced):
    """Row i is the mean reduced feature vector of the pixels of S_i."""
    if (reduced.height, reduced.width) != (seg.height, seg.width):
        raise DataError("segmentation and reduced cube dimensions differ")
    return _segment_sums(seg, reduced.values) / seg.sizes[:, None]


def compute_weighted(mean, adjacency, h=15.0):
    """
    Row i is the softmax(-||m_j - m_i||^2 / h)-weighted combination of the neighbour means;
    an isolated superpixel keeps its own mean.
    """
    weighted = np.array(mean, dtype=np.float64, copy=True)
    for i, neighbours in enumerate(adjacency):
        if not neighbours:
            continue
        ids = np.fromiter(sorted(neighbours), dtype=np.int64)
        distances = np.sum((mean[ids] - mean[i]) ** 2, axis=1)
        weights = softmax(-distances / h)
        weighted[i] = weights @ mean[ids]
    return weighted


def compute_centroids(seg):
    """Row i is the mean (row, col) pixel coordinate of S_i."""
    rows, cols = np.indices((seg.height, seg.width), dtype=np.float64)
    coords = np.stack([rows, cols], axis=2)
    return _segment_sums(seg, coords) / seg.sizes[:, None]


def extract_features(seg, reduced, h=15.0):
    """Build the full SuperpixelFeatures table for a segmentation."""
    adjacency = compute_adjacency(seg)
    mean = compute_mean(seg, reduced)
    features = SuperpixelFeatures(
        mean=mean,
        weighted=compute_weighted(mean, adjacency, h),
        centroid=compute_centroids(seg),
        adjacency=adjacency,
        h=float(h),
        image_shape=(seg.height, seg.width),
    )
    isolated = sum(1 for s in adjacency if not s)
    logger.info("Extracted features for %d superpixels (%d dims, %d isolated)", features.n, features.d, isolated)
    return features


def node_feature_matrix(features, kind="concat"):
    """Model input per superpixel: the mean, the weighted, or both concatenated."""
    if kind == "mean":
        return features.mean.copy()
    if kind == "weighted":
        return features.weighted.copy()
    if kind == "concat":
        return np.concatenate([features.mean, features.weighted], axis=1)
    raise DataError(f"unknown node feature kind '{kind}'")


def seed_labels(seg, gt, sampled_pixel_mask):
    """
    Label each superpixel by the majority class of the sampled pixels it contains.
    Ties go to the smallest class id; superpixels without sampled pixels get a zero row.
    """
    sampled = np.asarray(sampled_pixel_mask, dtype=bool)
    if sampled.shape != gt.labels.shape or seg.segment_id.shape != gt.labels.shape:
        raise DataError("sample mask, segmentation and ground truth dimensions differ")
    if np.any(sampled & (gt.labels == 0)):
        raise DataError("sampled pixels must be labelled")

    c = gt.class_count
    counts = np.zeros((seg.n, c + 1), dtype=np.int64)
    np.add.at(counts, (seg.segment_id[sampled], gt.labels[sampled]), 1)
    votes = counts[:, 1:]
    train_mask = votes.sum(axis=1) > 0
    Y = np.zeros((seg.n, c), dtype=np.float64)
    winners = np.argmax(votes, axis=1)
    Y[np.flatnonzero(train_mask), winners[train_mask]] = 1.0
    logger.info("Seeded %d of %d superpixels from %d sampled pixels", int(train_mask.sum()), seg.n,
                int(sampled.sum()))
    return SeedLabels(Y=Y, train_mask=train_mask)
