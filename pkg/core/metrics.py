# metrics.py
#
# This module computes the accuracy assessment of a classification map against held-out
# ground truth: confusion matrix, overall accuracy, average (per-class recall) accuracy and
# Cohen's kappa, all in percent, and aggregates reports over repeated runs.
#
# Usage: compute_metrics(pred_map, gt, test_mask, seed) per repeat, aggregate_reports(reports) at the end.
#
# Helper modules: Uses numpy and sklearn.metrics.confusion_matrix.

import logging

import numpy as np
from sklearn.metrics import confusion_matrix

from core.activity_logger import ActivityLogger
from core.errors import DataError
from models.reports import MetricsReport, MetricsSummary

logger = logging.getLogger(__name__)


def kappa_from_confusion(confusion):
    """Cohen's kappa (fraction, not percent) of a square confusion matrix."""
    confusion = np.asarray(confusion, dtype=np.float64)
    total = confusion.sum()
    p_o = np.trace(confusion) / total
    p_e = np.sum(confusion.sum(axis=1) * confusion.sum(axis=0)) / total ** 2
    if np.isclose(p_e, 1.0):
        return 1.0 if np.isclose(p_o, 1.0) else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


def compute_metrics(pred_map, gt, test_mask, seed=None):
    """
    Assess a pixel class map on the test pixels.

    Args:
        pred_map (np.ndarray): height x width predicted classes 1..c.
        gt (GroundTruth): Reference labels.
        test_mask (np.ndarray): Pixels to evaluate; unlabelled pixels are ignored.

    Returns:
        MetricsReport (classes absent from the test pixels get NaN recall and are left out of AA).
    """
    pred_map = np.asarray(pred_map)
    test_mask = np.asarray(test_mask, dtype=bool)
    if pred_map.shape != gt.labels.shape or test_mask.shape != gt.labels.shape:
        raise DataError("prediction, ground truth and test mask dimensions differ")
    evaluated = test_mask & gt.labeled_mask()
    if not evaluated.any():
        raise DataError("test mask selects no labelled pixels")

    classes = np.arange(1, gt.class_count + 1)
    confusion = confusion_matrix(gt.labels[evaluated], pred_map[evaluated], labels=classes)
    support = confusion.sum(axis=1)
    present = support > 0
    per_class = np.full(len(classes), np.nan)
    per_class[present] = 100.0 * np.diag(confusion)[present] / support[present]
    if not present.all():
        missing = classes[~present].tolist()
        logger.warning("Classes %s have no test pixels; excluded from AA", missing)
        ActivityLogger().log_activity("metrics", "warning", details={"absent_classes": missing})

    report = MetricsReport(
        oa=100.0 * np.trace(confusion) / confusion.sum(),
        aa=float(np.mean(per_class[present])),
        kappa=100.0 * kappa_from_confusion(confusion),
        per_class=per_class,
        confusion=confusion,
        seed=seed,
    )
    logger.info("OA %.2f  AA %.2f  Kappa %.2f on %d test pixels", report.oa, report.aa, report.kappa,
                int(evaluated.sum()))
    return report


def _nan_mean_std(rows):
    rows = np.asarray(rows, dtype=np.float64)
    valid = ~np.isnan(rows)
    counts = valid.sum(axis=0)
    filled = np.where(valid, rows, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(counts > 0, filled.sum(axis=0) / counts, np.nan)
        spread = np.where(valid, (rows - mean) ** 2, 0.0)
        std = np.where(counts > 0, np.sqrt(spread.sum(axis=0) / counts), np.nan)
    return mean, std


def aggregate_reports(reports):
    """Mean and population standard deviation over repeats."""
    if not reports:
        raise DataError("no reports to aggregate")
    oa = np.array([r.oa for r in reports])
    aa = np.array([r.aa for r in reports])
    kappa = np.array([r.kappa for r in reports])
    per_class_mean, per_class_std = _nan_mean_std([r.per_class for r in reports])
    return MetricsSummary(
        reports=list(reports),
        oa_mean=float(oa.mean()), oa_std=float(oa.std()),
        aa_mean=float(aa.mean()), aa_std=float(aa.std()),
        kappa_mean=float(kappa.mean()), kappa_std=float(kappa.std()),
        per_class_mean=per_class_mean,
        per_class_std=per_class_std,
    )
