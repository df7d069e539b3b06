# models/reports.py
#
# This module defines the result data classes: accuracy reports, their aggregation over
# repeats, scale-selection profiles, and training traces.
#
# Usage: Produced by core.metrics, core.scale_select and core.training; serialized by the
# pipeline runner into metrics.json, scale_profile.csv and loss_trace.csv.
#
# Helper modules: Uses dataclasses and numpy.

from dataclasses import dataclass, field
from typing import Any, List, Optional

import numpy as np


def _round_list(values, digits=10):
    return [None if v is None or not np.isfinite(v) else round(float(v), digits) for v in values]


@dataclass(eq=False)
class MetricsReport:
    """
    Accuracy assessment on held-out labelled pixels.

    Attributes:
        oa (float): Overall accuracy in percent.
        aa (float): Mean per-class recall in percent over classes present in the test set.
        kappa (float): Cohen's kappa in percent.
        per_class (np.ndarray): Per-class recall in percent (NaN for classes absent from test).
        confusion (np.ndarray): c x c counts, rows = reference class, columns = predicted class.
        seed (Optional[int]): Seed of the run that produced the prediction.
    """
    oa: float
    aa: float
    kappa: float
    per_class: np.ndarray
    confusion: np.ndarray
    seed: Optional[int] = None

    def to_dict(self):
        return {
            "oa": round(float(self.oa), 10),
            "aa": round(float(self.aa), 10),
            "kappa": round(float(self.kappa), 10),
            "per_class": _round_list(self.per_class),
            "confusion": self.confusion.astype(int).tolist(),
            "seed": self.seed,
        }


@dataclass(eq=False)
class MetricsSummary:
    """Mean and standard deviation of OA/AA/Kappa and per-class accuracy over repeats."""
    reports: List[MetricsReport]
    oa_mean: float
    oa_std: float
    aa_mean: float
    aa_std: float
    kappa_mean: float
    kappa_std: float
    per_class_mean: np.ndarray
    per_class_std: np.ndarray

    def to_dict(self):
        return {
            "oa": {"mean": round(self.oa_mean, 10), "std": round(self.oa_std, 10)},
            "aa": {"mean": round(self.aa_mean, 10), "std": round(self.aa_std, 10)},
            "kappa": {"mean": round(self.kappa_mean, 10), "std": round(self.kappa_std, 10)},
            "per_class": {"mean": _round_list(self.per_class_mean), "std": _round_list(self.per_class_std)},
            "repeats": [r.to_dict() for r in self.reports],
        }


@dataclass(eq=False)
class ScaleProfile:
    """
    Per-candidate-scale statistics of the optimal scale search.

    Attributes:
        scales (np.ndarray): Candidate cluster counts, ascending.
        cv_avg (np.ndarray): Inlier CV_avg per scale.
        inliers (np.ndarray): Inlier segment count P per scale.
        inertia (np.ndarray): K-means inertia per scale.
        cluster_std (np.ndarray): Standard deviation of inlier CV_p per scale.
        nn_ncv (Optional[np.ndarray]): Normalised CV per scale (filled by nn_nroc).
        nn_nroc (Optional[np.ndarray]): Normalised rate of change (NaN for the first scale).
    """
    scales: np.ndarray
    cv_avg: np.ndarray
    inliers: np.ndarray
    inertia: np.ndarray
    cluster_std: np.ndarray
    nn_ncv: Optional[np.ndarray] = None
    nn_nroc: Optional[np.ndarray] = None

    @property
    def complete(self):
        return self.nn_ncv is not None and self.nn_nroc is not None

    def rows(self):
        """Rows (scale, cv_avg, nn_ncv, nn_nroc, P, inertia) for CSV export."""
        nn_ncv = self.nn_ncv if self.nn_ncv is not None else np.full(len(self.scales), np.nan)
        nn_nroc = self.nn_nroc if self.nn_nroc is not None else np.full(len(self.scales), np.nan)
        for i, scale in enumerate(self.scales):
            yield (int(scale), float(self.cv_avg[i]), float(nn_ncv[i]), float(nn_nroc[i]),
                   int(self.inliers[i]), float(self.inertia[i]))


@dataclass(eq=False)
class OptimalScales:
    """
    Ranked NN-nRoC peaks and the selected resolution list.

    Attributes:
        peaks (List[tuple]): (scale, value) pairs sorted by value descending.
        selected (List[int]): Top-m peak scales sorted descending by scale.
    """
    peaks: List[tuple]
    selected: List[int]

    def to_dict(self):
        return {
            "peaks": [{"scale": int(s), "nn_nroc": round(float(v), 12)} for s, v in self.peaks],
            "selected": [int(s) for s in self.selected],
        }


@dataclass(eq=False)
class TrainResult:
    """Trained model plus its per-epoch loss trace and wall-clock timings."""
    model: Any
    loss_trace: List[float] = field(default_factory=list)
    train_seconds: float = 0.0
    inference_seconds: float = 0.0


@dataclass(eq=False)
class ClusterResult:
    """
    Outcome of one k-means run.

    Attributes:
        labels (np.ndarray): Cluster id 0..k-1 per point.
        centers (np.ndarray): k x d cluster centres.
        inertia (float): Sum of squared distances to the assigned centres.
        iterations (int): Lloyd iterations performed.
    """
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    iterations: int
