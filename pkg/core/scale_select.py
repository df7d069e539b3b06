# scale_select.py
#
# This module chooses the multiresolution cluster counts automatically.
# For every candidate cluster count n the superpixel features are clustered with k-means,
# each cluster is summarised by its coefficient of variation (CV_p), outlying clusters are
# pruned with an isolation forest, and the inlier average CV_avg forms a curve over n.
# The curve is min-max normalised (NN-nCV) and its relative rate of change divided by the
# inlier count (NN-nRoC) is searched for peaks; the highest peaks become the resolutions.
#
# Usage:
#   profile = build_scale_profile(features.mean, config=ScaleSelectConfig(), seed=0)
#   chosen = select_optimal_scales(profile, m=5).selected
#
# Helper modules: Uses numpy, sklearn.cluster.kmeans_plusplus for seeding,
# sklearn.ensemble.IsolationForest for outlier scores, csv for the profile export.

import csv
import logging
import math
from dataclasses import replace

import numpy as np
from sklearn.cluster import kmeans_plusplus
from sklearn.ensemble import IsolationForest

from core.activity_logger import ActivityLogger
from core.errors import ConfigError, ContractError, DataError
from models.config import ScaleSelectConfig
from models.reports import ClusterResult, OptimalScales, ScaleProfile
from utils.config import AppConfig

logger = logging.getLogger(__name__)

NCV_FLOOR = 1e-12


def _squared_distances(X, centers):
    d = np.sum(X * X, axis=1)[:, None] + np.sum(centers * centers, axis=1)[None, :] - 2.0 * (X @ centers.T)
    return np.maximum(d, 0.0)


def kmeans(features, k, seed=0, max_iter=None, tol=None):
    """
    Lloyd's algorithm from k-means++ seeds.

    Stops after max_iter iterations or when the relative inertia change drops below tol.
    A cluster that loses all its points is re-seeded at the point farthest from its centre.

    Raises:
        ConfigError: k < 1 or k > number of points.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    k = int(k)
    if k < 1 or k > n:
        raise ConfigError(f"k-means needs 1 <= k <= {n}, got k={k}")
    max_iter = AppConfig.KMEANS_MAX_ITER if max_iter is None else int(max_iter)
    tol = AppConfig.KMEANS_TOL if tol is None else float(tol)

    centers, _ = kmeans_plusplus(X, k, random_state=seed)
    centers = centers.astype(np.float64)
    previous = None
    labels = np.zeros(n, dtype=np.int64)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        d = _squared_distances(X, centers)
        labels = np.argmin(d, axis=1)
        own = d[np.arange(n), labels]
        counts = np.bincount(labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            far = int(np.argmax(np.where(counts[labels] > 1, own, -1.0)))
            counts[labels[far]] -= 1
            labels[far] = empty
            counts[empty] = 1
            own[far] = 0.0
            centers[empty] = X[far]
        inertia = float(own.sum())
        for p in range(k):
            centers[p] = X[labels == p].mean(axis=0)
        if previous is not None and abs(previous - inertia) <= tol * max(previous, np.finfo(float).tiny):
            break
        previous = inertia
    inertia = float(np.sum((X - centers[labels]) ** 2))
    return ClusterResult(labels=labels, centers=centers, inertia=inertia, iterations=iterations)


def cv_statistics(features, labels, k=None, mode="printed"):
    """
    Per-cluster CV_p and their average CV_avg.

    mode "printed": CV_p is the population standard deviation per dimension averaged over dimensions.
    mode "relative": each dimension's deviation is divided by |mean| (0 where the mean is 0).
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1 if k is None else int(k)
    if mode not in ("printed", "relative"):
        raise ConfigError(f"unknown CV mode '{mode}'")
    cv = np.zeros(k)
    for p in range(k):
        members = X[labels == p]
        if len(members) == 0:
            raise DataError(f"cluster {p} is empty")
        spread = members.std(axis=0)
        if mode == "relative":
            centre = np.abs(members.mean(axis=0))
            spread = np.divide(spread, centre, out=np.zeros_like(spread), where=centre > 0)
        cv[p] = spread.mean()
    return cv, float(cv.mean())


def isolation_forest(values, trees=None, subsample=None, contamination=None, seed=0):
    """
    Inlier mask over per-cluster values: the floor(contamination * P) highest anomaly scores are
    outliers (ties broken toward the smaller index). Fewer than 1 / contamination clusters,
    identical values or zero contamination keep everything.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    trees = AppConfig.IFOREST_TREES if trees is None else int(trees)
    subsample = AppConfig.IFOREST_SUBSAMPLE if subsample is None else int(subsample)
    contamination = AppConfig.IFOREST_CONTAMINATION if contamination is None else float(contamination)
    count = len(values)
    inliers = np.ones(count, dtype=bool)
    # rounded so that 0.05 * 20 counts as one whole outlier
    flagged = math.floor(round(max(contamination, 0.0) * count, 9))
    if count < 2 or flagged < 1 or np.ptp(values) == 0:
        return inliers
    forest = IsolationForest(n_estimators=trees, max_samples=min(count, subsample), random_state=seed)
    forest.fit(values[:, None])
    anomaly = -forest.score_samples(values[:, None])
    order = np.lexsort((np.arange(count), -anomaly))
    inliers[order[:flagged]] = False
    return inliers


def candidate_scales(n_points, min_scale=None, max_scale=None):
    """Every integer cluster count from min_scale to min(n_points, max_scale)."""
    min_scale = AppConfig.SCALES_MIN if min_scale is None else int(min_scale)
    max_scale = AppConfig.SCALES_MAX if max_scale is None else int(max_scale)
    upper = min(int(n_points), max_scale)
    if upper - min_scale < 1:
        raise ConfigError(f"need at least two candidate scales, have {min_scale}..{upper}")
    return np.arange(min_scale, upper + 1)


def nn_nroc(profile):
    """
    Complete a profile: NN-nCV is the min-max normalised CV_avg floored at NCV_FLOOR and
    NN-nRoC_n = |(NN-nCV_n - NN-nCV_{n-1}) / NN-nCV_{n-1}| / P_n (NaN for the first scale).

    A constant CV_avg curve has zero rate everywhere. After a scale whose NN-nCV sits on the
    floor the rate is left NaN, since the ratio would only measure the floor.
    """
    cv = np.asarray(profile.cv_avg, dtype=np.float64)
    if len(cv) < 2:
        raise ContractError("NN-nRoC needs at least two candidate scales")
    low, high = cv.min(), cv.max()
    rate = np.full(len(cv), np.nan)
    if high <= low:
        rate[1:] = 0.0
        return replace(profile, nn_ncv=np.full(len(cv), NCV_FLOOR), nn_nroc=rate)
    normalized = np.maximum((cv - low) / (high - low), NCV_FLOOR)
    for i in range(1, len(cv)):
        previous = normalized[i - 1]
        if previous <= NCV_FLOOR:
            logger.warning("NN-nCV is zero before scale %d; rate of change skipped", int(profile.scales[i]))
            continue
        rate[i] = abs((normalized[i] - previous) / previous) / max(int(profile.inliers[i]), 1)
    return replace(profile, nn_ncv=normalized, nn_nroc=rate)


def build_scale_profile(features, scales=None, seed=0, config=None):
    """
    Cluster the features at every candidate scale and assemble the completed ScaleProfile.
    """
    config = config or ScaleSelectConfig()
    X = np.asarray(features, dtype=np.float64)
    if scales is None:
        scales = candidate_scales(len(X), config.min_scale, config.max_scale)
    scales = np.asarray(sorted(int(s) for s in scales))
    cv_avg, inliers, inertia, spread = [], [], [], []
    for scale in scales:
        clusters = kmeans(X, scale, seed=seed)
        cv_p, _ = cv_statistics(X, clusters.labels, scale, config.cv_mode)
        keep = isolation_forest(cv_p, config.trees, config.subsample, config.contamination, seed)
        cv_avg.append(float(cv_p[keep].mean()))
        inliers.append(int(keep.sum()))
        inertia.append(clusters.inertia)
        spread.append(float(cv_p[keep].std()))
    profile = ScaleProfile(scales=scales, cv_avg=np.array(cv_avg), inliers=np.array(inliers),
                           inertia=np.array(inertia), cluster_std=np.array(spread))
    logger.info("Scale profile over %d candidate scales (%d..%d)", len(scales), scales[0], scales[-1])
    return nn_nroc(profile)


def find_peaks(values):
    """
    Indices of strict interior local maxima; a flat top counts once, at its leftmost index.
    NaN values compare as 0.
    """
    v = np.nan_to_num(np.asarray(values, dtype=np.float64), nan=0.0)
    peaks = []
    i = 1
    while i < len(v) - 1:
        if v[i] > v[i - 1]:
            j = i
            while j + 1 < len(v) and v[j + 1] == v[i]:
                j += 1
            if j + 1 < len(v) and v[j + 1] < v[i]:
                peaks.append(i)
            i = j + 1
        else:
            i += 1
    return peaks


def select_optimal_scales(profile, m=None):
    """
    Rank the NN-nRoC peaks by value (descending, ties toward the smaller scale) and return
    the top m scales sorted descending by scale.
    """
    if not profile.complete:
        raise ContractError("scale profile has no NN-nRoC curve; run nn_nroc first")
    m = AppConfig.SCALES_TOP_M if m is None else int(m)
    values = np.nan_to_num(profile.nn_nroc, nan=0.0)
    peaks = [(int(profile.scales[i]), float(values[i])) for i in find_peaks(values)]
    peaks.sort(key=lambda peak: (-peak[1], peak[0]))
    if len(peaks) < m:
        logger.warning("Only %d NN-nRoC peaks found, fewer than the %d requested", len(peaks), m)
        ActivityLogger().log_activity("scales", "warning", details={"peaks": len(peaks), "requested": m})
    selected = sorted((scale for scale, _ in peaks[:m]), reverse=True)
    return OptimalScales(peaks=peaks, selected=selected)


def write_scale_profile_csv(profile, path):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scale", "cv_avg", "nn_ncv", "nn_nroc", "P", "inertia"])
        for scale, cv, ncv, nroc, count, inertia in profile.rows():
            writer.writerow([scale, repr(cv), repr(ncv), repr(nroc), count, repr(inertia)])
    return path
