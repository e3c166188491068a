"""Classification metrics for transductive experiments.

Accuracy and macro precision/recall/F1 from the confusion matrix,
rank-based one-vs-rest ROC-AUC, exact two-sample KS statistics, and ROC
curve export.  All ranking metrics use the Mann-Whitney convention:
tied scores contribute half credit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

logger = logging.getLogger(__name__)

__all__ = [
    "MetricsReport",
    "classification_metrics",
    "ks_statistic",
    "metrics_report",
    "normalize_scores",
    "roc_auc_ovr",
    "roc_curve_points",
]


@dataclass(frozen=True, eq=False)
class MetricsReport:
    """All metrics reported for one experiment run."""

    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    auc_per_class: np.ndarray
    auc_overall: float
    ks_per_class: np.ndarray
    roc_curves: list = field(repr=False)

    def __post_init__(self):
        scalars = {
            "accuracy": self.accuracy,
            "precision_macro": self.precision_macro,
            "recall_macro": self.recall_macro,
            "f1_macro": self.f1_macro,
            "auc_overall": self.auc_overall,
        }
        for name, value in scalars.items():
            if not (np.isnan(value) or 0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        for curve in self.roc_curves:
            pts = np.asarray(curve)
            if pts.ndim != 2 or pts.shape[1] != 2:
                raise ValueError("roc curves must be lists of (fpr, tpr) points")
            if not (np.allclose(pts[0], (0, 0)) and np.allclose(pts[-1], (1, 1))):
                raise ValueError("roc curves must run from (0,0) to (1,1)")
            if (np.diff(pts[:, 0]) < -1e-12).any() or (np.diff(pts[:, 1]) < -1e-12).any():
                raise ValueError("roc curves must be monotone")


def classification_metrics(true, predicted, k):
    """(accuracy, macro precision, macro recall, macro F1) from class ids.

    Per-class ratios with an empty denominator (no predictions, or no true
    members) are defined as 0; macro scores are unweighted class means.
    """
    true = np.asarray(true)
    predicted = np.asarray(predicted)
    if true.shape != predicted.shape or true.ndim != 1 or len(true) < 1:
        raise ValueError("true and predicted must be equal-length 1-d arrays")
    for arr, name in ((true, "true"), (predicted, "predicted")):
        if arr.min() < 0 or arr.max() >= k:
            raise ValueError(f"{name} contains class ids outside [0, {k})")
    confusion = np.zeros((k, k), dtype=int)
    np.add.at(confusion, (true, predicted), 1)
    tp = np.diag(confusion).astype(float)
    predicted_count = confusion.sum(axis=0).astype(float)
    true_count = confusion.sum(axis=1).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted_count > 0, tp / predicted_count, 0.0)
        recall = np.where(true_count > 0, tp / true_count, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / np.where(denom > 0, denom, 1), 0.0)
    accuracy = float(tp.sum() / len(true))
    return accuracy, float(precision.mean()), float(recall.mean()), float(f1.mean())


def _rank_auc(scores, positives):
    """Mann-Whitney AUC via tie-averaged ranks."""
    ranks = rankdata(scores, method="average")
    p = int(positives.sum())
    n = len(scores) - p
    return float((ranks[positives].sum() - p * (p + 1) / 2) / (p * n))


def roc_auc_ovr(scores, true):
    """One-vs-rest AUC per class and their unweighted mean.

    A class with no positive (or no negative) examples has no defined AUC;
    it is reported as NaN and excluded from the mean with a warning.
    """
    scores = np.asarray(scores, dtype=float)
    true = np.asarray(true)
    n, k = scores.shape
    per_class = np.empty(k)
    for c in range(k):
        positives = true == c
        pos = int(positives.sum())
        if pos == 0 or pos == n:
            logger.warning(
                "AUC undefined for class %d (%s positives); excluded from mean",
                c,
                "no" if pos == 0 else "only",
            )
            per_class[c] = np.nan
            continue
        per_class[c] = _rank_auc(scores[:, c], positives)
    valid = ~np.isnan(per_class)
    overall = float(per_class[valid].mean()) if valid.any() else float("nan")
    return per_class, overall


def ks_statistic(scores, positives):
    """Exact two-sample KS distance between positive and negative scores."""
    scores = np.asarray(scores, dtype=float)
    positives = np.asarray(positives, dtype=bool)
    pos = np.sort(scores[positives])
    neg = np.sort(scores[~positives])
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("need at least one positive and one negative score")
    thresholds = np.unique(scores)
    cdf_pos = np.searchsorted(pos, thresholds, side="right") / len(pos)
    cdf_neg = np.searchsorted(neg, thresholds, side="right") / len(neg)
    return float(np.abs(cdf_pos - cdf_neg).max())


def roc_curve_points(scores, positives):
    """ROC points from a descending threshold sweep over distinct scores.

    The curve runs from (0, 0) to (1, 1); its trapezoidal area equals the
    rank-based AUC (ties enter as diagonal segments).
    """
    scores = np.asarray(scores, dtype=float)
    positives = np.asarray(positives, dtype=bool)
    p = int(positives.sum())
    n = len(scores) - p
    if p == 0 or n == 0:
        raise ValueError("need at least one positive and one negative score")
    points = [(0.0, 0.0)]
    for t in np.unique(scores)[::-1]:
        called = scores >= t
        tpr = float((called & positives).sum() / p)
        fpr = float((called & ~positives).sum() / n)
        if (fpr, tpr) != points[-1]:
            points.append((fpr, tpr))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    return points


def normalize_scores(U):
    """Turn raw class scores into per-row probabilities.

    If every entry is nonnegative, rows are divided by their sums (all-zero
    rows become uniform); otherwise every row goes through a softmax.  The
    switch is decided for the whole matrix so scores stay comparable down
    each column.
    """
    U = np.asarray(U, dtype=float)
    k = U.shape[1]
    if (U >= 0).all():
        sums = U.sum(axis=1, keepdims=True)
        out = np.where(sums > 0, U / np.where(sums > 0, sums, 1), 1.0 / k)
        return out
    shifted = U - U.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def metrics_report(true, predicted, scores) -> MetricsReport:
    """Assemble the full report for one run from ids and probability scores."""
    scores = np.asarray(scores, dtype=float)
    k = scores.shape[1]
    accuracy, precision, recall, f1 = classification_metrics(true, predicted, k)
    auc_per_class, auc_overall = roc_auc_ovr(scores, true)
    true = np.asarray(true)
    ks = np.empty(k)
    curves = []
    for c in range(k):
        positives = true == c
        if positives.any() and not positives.all():
            ks[c] = ks_statistic(scores[:, c], positives)
            curves.append(np.asarray(roc_curve_points(scores[:, c], positives)))
        else:
            ks[c] = np.nan
            curves.append(np.array([[0.0, 0.0], [1.0, 1.0]]))
    return MetricsReport(
        accuracy=accuracy,
        precision_macro=precision,
        recall_macro=recall,
        f1_macro=f1,
        auc_per_class=auc_per_class,
        auc_overall=auc_overall,
        ks_per_class=ks,
        roc_curves=curves,
    )
