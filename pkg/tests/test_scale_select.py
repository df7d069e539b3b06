import logging

import numpy as np
import pytest

from core import hsi_io
from core.errors import ConfigError, ContractError, DataError
from core.features import extract_features
from core.scale_select import (NCV_FLOOR, build_scale_profile, candidate_scales, cv_statistics, find_peaks,
                               isolation_forest, kmeans, nn_nroc, select_optimal_scales, write_scale_profile_csv)
from core.segmentation import felzenszwalb_segment
from core.synthetic import generate_synthetic
from models.config import ScaleSelectConfig, SyntheticSceneSpec
from models.reports import ScaleProfile
from models.segmentation import SegmentationParams

CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


def blobs(rng, per_blob=50, spread=0.05):
    points = np.concatenate([centre + spread * rng.normal(size=(per_blob, 2)) for centre in CORNERS])
    return points, np.repeat(np.arange(len(CORNERS)), per_blob)


def profile_with_curve(scales, curve):
    n = len(scales)
    return ScaleProfile(scales=np.asarray(scales), cv_avg=np.zeros(n), inliers=np.ones(n, dtype=int),
                        inertia=np.zeros(n), cluster_std=np.zeros(n), nn_ncv=np.zeros(n),
                        nn_nroc=np.asarray(curve, dtype=float))


# --- k-means ---

def test_kmeans_recovers_separated_blobs(rng):
    points, truth = blobs(rng)
    result = kmeans(points, 4, seed=0)
    for blob in range(4):
        assert len(set(result.labels[truth == blob])) == 1
    assert len(set(result.labels)) == 4
    direct = sum(np.sum((points[result.labels == p] - result.centers[p]) ** 2) for p in range(4))
    assert result.inertia == pytest.approx(direct)
    assert result.iterations >= 1


def test_kmeans_edge_cases(rng):
    points = rng.random((6, 3))
    assert kmeans(points, 6, seed=1).inertia == pytest.approx(0.0, abs=1e-20)
    single = kmeans(points, 1)
    np.testing.assert_allclose(single.centers[0], points.mean(axis=0))
    with pytest.raises(ConfigError):
        kmeans(points, 7)
    with pytest.raises(ConfigError):
        kmeans(points, 0)


def test_kmeans_is_deterministic_per_seed(rng):
    points = rng.random((40, 2))
    a, b = kmeans(points, 5, seed=3), kmeans(points, 5, seed=3)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.centers, b.centers)


# --- coefficient of variation ---

def test_cv_of_a_two_point_cluster():
    cv, average = cv_statistics(np.array([0.0, 2.0, 7.0]), np.array([0, 0, 1]))
    np.testing.assert_allclose(cv, [1.0, 0.0])
    assert average == pytest.approx(0.5)
    relative, _ = cv_statistics(np.array([0.0, 2.0, 7.0]), np.array([0, 0, 1]), mode="relative")
    np.testing.assert_allclose(relative, [1.0, 0.0])


def test_cv_matches_double_loop(rng):
    X = rng.normal(size=(30, 3))
    labels = np.arange(30) % 4
    cv, average = cv_statistics(X, labels)
    for p in range(4):
        members = [X[i] for i in range(30) if labels[i] == p]
        total = 0.0
        for dim in range(3):
            mu = sum(m[dim] for m in members) / len(members)
            total += np.sqrt(sum((m[dim] - mu) ** 2 for m in members) / len(members))
        assert cv[p] == pytest.approx(total / 3, abs=1e-9)
    assert average == pytest.approx(cv.mean())


def test_cv_of_constant_features_and_errors():
    cv, average = cv_statistics(np.ones((5, 2)), np.array([0, 0, 1, 1, 1]))
    assert average == 0.0
    with pytest.raises(DataError):
        cv_statistics(np.ones((3, 1)), np.array([0, 0, 2]))
    with pytest.raises(ConfigError):
        cv_statistics(np.ones((3, 1)), np.zeros(3, dtype=int), mode="geometric")


# --- isolation forest ---

def test_isolation_forest_flags_the_extreme_value(rng):
    values = 1.0 + 1e-3 * rng.random(100)
    values[37] = 50.0
    inliers = isolation_forest(values, trees=100, subsample=256, contamination=0.01, seed=0)
    assert not inliers[37]
    assert inliers.sum() == 99


def test_isolation_forest_keeps_everything_when_nothing_stands_out():
    assert isolation_forest(np.full(10, 0.3)).all()
    assert isolation_forest(np.arange(10.0), contamination=0.0).all()
    assert isolation_forest(np.array([4.0])).all()
    assert (~isolation_forest(np.arange(40.0), contamination=0.05)).sum() == 2


def test_isolation_forest_needs_one_whole_outlier(rng):
    values = 1.0 + 1e-3 * rng.random(19)
    values[4] = 50.0
    assert isolation_forest(values, contamination=0.05).all()
    values = np.append(values, 1.0)
    inliers = isolation_forest(values, contamination=0.05)
    assert not inliers[4] and inliers.sum() == 19


# --- NN-nRoC ---

def test_candidate_scales():
    np.testing.assert_array_equal(candidate_scales(5), [2, 3, 4, 5])
    np.testing.assert_array_equal(candidate_scales(500, 3, 6), [3, 4, 5, 6])
    with pytest.raises(ConfigError):
        candidate_scales(2)


def test_nn_nroc_hand_arithmetic():
    profile = ScaleProfile(scales=np.array([2, 3, 4]), cv_avg=np.array([0.0, 0.5, 1.0]),
                           inliers=np.array([10, 10, 10]), inertia=np.zeros(3), cluster_std=np.zeros(3))
    completed = nn_nroc(profile)
    np.testing.assert_allclose(completed.nn_ncv, [NCV_FLOOR, 0.5, 1.0])
    assert np.isnan(completed.nn_nroc[0])
    assert np.isnan(completed.nn_nroc[1])
    assert completed.nn_nroc[2] == pytest.approx(0.1)
    assert profile.nn_nroc is None


def test_nn_nroc_constant_and_monotone_curves():
    flat = nn_nroc(ScaleProfile(scales=np.arange(2, 6), cv_avg=np.full(4, 0.7), inliers=np.full(4, 3),
                                inertia=np.zeros(4), cluster_std=np.zeros(4)))
    np.testing.assert_array_equal(flat.nn_nroc[1:], 0.0)
    falling = nn_nroc(ScaleProfile(scales=np.arange(2, 8), cv_avg=np.linspace(1.0, 0.2, 6), inliers=np.full(6, 4),
                                   inertia=np.zeros(6), cluster_std=np.zeros(6)))
    assert np.all(falling.nn_nroc[1:] >= 0)
    assert np.all((falling.nn_ncv >= 0) & (falling.nn_ncv <= 1))
    with pytest.raises(ContractError):
        nn_nroc(ScaleProfile(scales=np.array([2]), cv_avg=np.array([1.0]), inliers=np.array([2]),
                             inertia=np.zeros(1), cluster_std=np.zeros(1)))


@pytest.mark.parametrize("values,expected", [
    ([0, 1, 0], [1]),
    ([0, 2, 2, 1], [1]),
    ([0, 1, 1], []),
    ([3, 1, 2], []),
    ([np.nan, 0.5, np.nan, 0.2, 0.1], [1, 3]),
    ([0, 1, 0, 1, 0], [1, 3]),
    ([1.0], []),
])
def test_find_peaks(values, expected):
    assert find_peaks(values) == expected


def test_selection_ranks_peaks_and_returns_scales_descending():
    scales = np.arange(2, 51)
    curve = np.zeros(len(scales))
    heights = {4: 0.9, 17: 0.8, 8: 0.7, 24: 0.6, 42: 0.5, 30: 0.1, 12: 0.05}
    for scale, value in heights.items():
        curve[scale - 2] = value
    chosen = select_optimal_scales(profile_with_curve(scales, curve), m=5)
    assert [scale for scale, _ in chosen.peaks[:5]] == [4, 17, 8, 24, 42]
    assert chosen.selected == [42, 24, 17, 8, 4]
    scaled = select_optimal_scales(profile_with_curve(scales, 3.0 * curve), m=5)
    assert scaled.selected == chosen.selected


def test_selection_tie_goes_to_smaller_scale_and_short_lists_warn(caplog):
    curve = [0.0, 0.4, 0.0, 0.4, 0.0]
    chosen = select_optimal_scales(profile_with_curve(np.arange(2, 7), curve), m=1)
    assert chosen.selected == [3]
    with caplog.at_level(logging.WARNING):
        single = select_optimal_scales(profile_with_curve(np.arange(2, 7), [0.0, 0.0, 0.9, 0.1, 0.0]), m=5)
    assert single.selected == [4]
    assert "fewer than" in caplog.text
    incomplete = ScaleProfile(scales=np.arange(2, 5), cv_avg=np.zeros(3), inliers=np.ones(3), inertia=np.zeros(3),
                              cluster_std=np.zeros(3))
    with pytest.raises(ContractError):
        select_optimal_scales(incomplete)


# --- end to end ---

def test_profile_is_deterministic_and_exported(tmp_path, rng):
    points, _ = blobs(rng, per_blob=15)
    config = ScaleSelectConfig(min_scale=2, max_scale=8, trees=20)
    first = build_scale_profile(points, seed=2, config=config)
    second = build_scale_profile(points, seed=2, config=config)
    np.testing.assert_array_equal(first.nn_nroc, second.nn_nroc)
    np.testing.assert_array_equal(first.scales, np.arange(2, 9))
    assert np.all(first.cv_avg >= 0)
    chosen = select_optimal_scales(first, m=3)
    assert set(chosen.selected) <= set(first.scales.tolist())
    path = write_scale_profile_csv(first, str(tmp_path / "profile.csv"))
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[0] == "scale,cv_avg,nn_ncv,nn_nroc,P,inertia"
    assert len(lines) == 1 + 7


@pytest.mark.slow
def test_planted_group_count_is_among_the_top_peaks_of_a_segmented_scene():
    hits = 0
    for seed in range(5):
        cube, _ = generate_synthetic(SyntheticSceneSpec(height=64, width=64, bands=8, classes=4), seed=seed)
        reduced = hsi_io.pca_reduce(hsi_io.normalize_bands(cube))
        seg = felzenszwalb_segment(reduced, SegmentationParams(min_size=20))
        table = extract_features(seg, reduced)
        chosen = select_optimal_scales(build_scale_profile(table.mean, seed=seed))
        if 4 in [scale for scale, _ in chosen.peaks[:3]]:
            hits += 1
    assert hits >= 4
