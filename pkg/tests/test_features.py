import numpy as np
import pytest

from conftest import reduced_from
from core.errors import DataError
from core.features import (compute_adjacency, compute_centroids, compute_mean, compute_weighted, extract_features,
                           node_feature_matrix, seed_labels)
from models.cube import GroundTruth
from models.features import SeedLabels
from models.segmentation import Segmentation


@pytest.fixture
def three_segments():
    return Segmentation(np.array([[0, 0, 1],
                                  [2, 2, 1]]))


def test_adjacency_uses_four_neighbours(three_segments):
    assert compute_adjacency(three_segments) == (frozenset({1, 2}), frozenset({0, 2}), frozenset({0, 1}))
    diagonal_only = Segmentation(np.array([[0, 1], [1, 2]]))
    adjacency = compute_adjacency(diagonal_only)
    assert 2 not in adjacency[0]
    assert compute_adjacency(Segmentation(np.zeros((3, 3), dtype=int))) == (frozenset(),)


def test_mean_and_centroid(three_segments):
    values = np.array([[1.0, 3.0, 5.0],
                       [2.0, 4.0, 7.0]])
    mean = compute_mean(three_segments, reduced_from(values))
    np.testing.assert_allclose(mean[:, 0], [2.0, 6.0, 3.0])
    np.testing.assert_allclose(compute_centroids(three_segments), [[0.0, 0.5], [0.5, 2.0], [1.0, 0.5]])
    with pytest.raises(DataError):
        compute_mean(three_segments, reduced_from(np.zeros((3, 3))))


def test_weighted_features_follow_the_softmax_kernel():
    mean = np.array([[0.0], [1.0], [3.0]])
    adjacency = (frozenset({1, 2}), frozenset({0}), frozenset())
    weighted = compute_weighted(mean, adjacency, h=2.0)
    w1, w2 = np.exp(-1.0 / 2.0), np.exp(-9.0 / 2.0)
    assert weighted[0, 0] == pytest.approx((w1 * 1.0 + w2 * 3.0) / (w1 + w2))
    assert weighted[1, 0] == pytest.approx(0.0)
    assert weighted[2, 0] == 3.0


def test_large_bandwidth_averages_neighbours():
    mean = np.array([[0.0, 0.0], [2.0, 4.0], [4.0, 0.0]])
    adjacency = (frozenset({1, 2}), frozenset({0}), frozenset({0}))
    weighted = compute_weighted(mean, adjacency, h=1e12)
    np.testing.assert_allclose(weighted[0], [3.0, 2.0])


def test_extract_features_and_node_matrix(small_scene):
    from core.hsi_io import pca_reduce
    from core.segmentation import felzenszwalb_segment
    from models.segmentation import SegmentationParams
    cube, _ = small_scene
    reduced = pca_reduce(cube)
    seg = felzenszwalb_segment(reduced, SegmentationParams(min_size=8))
    table = extract_features(seg, reduced, h=15.0)
    assert table.n == seg.n and table.d == reduced.dims
    assert table.image_shape == (24, 24)
    assert node_feature_matrix(table, "concat").shape == (seg.n, 2 * reduced.dims)
    np.testing.assert_array_equal(node_feature_matrix(table, "mean"), table.mean)
    np.testing.assert_array_equal(node_feature_matrix(table, "weighted"), table.weighted)
    assert np.all(table.normalized_centroids() <= 1.0)
    with pytest.raises(DataError):
        node_feature_matrix(table, "pixels")


def test_seed_labels_take_majority_with_smallest_class_on_ties(three_segments):
    gt = GroundTruth(np.array([[2, 1, 3],
                               [2, 2, 3]]), class_count=3)
    sampled = np.array([[True, True, True],
                        [False, False, False]])
    seeds = seed_labels(three_segments, gt, sampled)
    np.testing.assert_array_equal(seeds.Y, [[1, 0, 0], [0, 0, 1], [0, 0, 0]])
    np.testing.assert_array_equal(seeds.train_mask, [True, True, False])
    np.testing.assert_array_equal(seeds.seed_classes(), [1, 3, 0])


def test_seed_labels_rejects_unlabelled_samples(three_segments):
    gt = GroundTruth(np.array([[0, 1, 1], [1, 1, 1]]), class_count=1)
    with pytest.raises(DataError):
        seed_labels(three_segments, gt, np.ones((2, 3), dtype=bool))


def test_seed_matrix_validation():
    with pytest.raises(DataError):
        SeedLabels(Y=np.array([[1.0, 1.0]]), train_mask=np.array([True]))
    with pytest.raises(DataError):
        SeedLabels(Y=np.array([[0.0, 1.0]]), train_mask=np.array([False]))
