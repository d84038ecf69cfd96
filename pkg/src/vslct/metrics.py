"""ROC curves and AUC for binary scores.

Conventions used throughout:

* Scores are minority-class probabilities (or any monotone transform);
  higher means more confident in class 1.
* A threshold t predicts class 1 exactly when score > t, strictly.
* The ROC curve enumerates thresholds +inf, then each distinct score in
  descending order, then -inf; the +inf point and the highest-score point
  coincide at (0, 0), so the highest score is dropped.  Every curve point
  is therefore reproduced exactly by `confusion_at_threshold` at the
  matching entry of `thresholds`.
* AUC integrates the curve by the trapezoid rule, which on step-shaped
  ROC data equals the tie-aware pair-counting probability
  P(score_pos > score_neg) + 0.5 P(tie).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LabeledScores",
    "ConfusionCounts",
    "RocCurve",
    "roc_curve",
    "auc_pair_oracle",
    "confusion_at_threshold",
    "roc_at_fpr_grid",
]


@dataclass(frozen=True)
class LabeledScores:
    """Parallel arrays of classifier scores and 0/1 labels."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        labels = np.asarray(self.labels)
        if scores.ndim != 1 or labels.ndim != 1:
            raise ValueError("scores and labels must be one-dimensional")
        if scores.shape != labels.shape:
            raise ValueError(f"length mismatch: {scores.shape[0]} scores, {labels.shape[0]} labels")
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
        if not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels.astype(np.int64))

    @property
    def n_pos(self) -> int:
        return int(np.sum(self.labels == 1))

    @property
    def n_neg(self) -> int:
        return int(np.sum(self.labels == 0))

    def require_both_classes(self) -> None:
        if self.n_pos == 0 or self.n_neg == 0:
            raise ValueError("need at least one sample of each class")


@dataclass(frozen=True)
class ConfusionCounts:
    """2x2 confusion table at a fixed threshold."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def tpr(self) -> float:
        pos = self.tp + self.fn
        if pos == 0:
            raise ValueError("TPR undefined without positive samples")
        return self.tp / pos

    @property
    def fpr(self) -> float:
        neg = self.fp + self.tn
        if neg == 0:
            raise ValueError("FPR undefined without negative samples")
        return self.fp / neg

    @property
    def accuracy(self) -> float:
        total = self.tp + self.fp + self.tn + self.fn
        return (self.tp + self.tn) / total


@dataclass(frozen=True)
class RocCurve:
    """Operating points (fpr[i], tpr[i]) achieved by score > thresholds[i]."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def auc(self) -> float:
        """Area under the curve by the trapezoid rule."""
        return float(np.trapezoid(self.tpr, self.fpr))


def roc_curve(data: LabeledScores) -> RocCurve:
    """Full ROC curve over all distinct-score thresholds.

    The first point is (0, 0) at threshold +inf and the last is (1, 1) at
    threshold -inf; interior point i is the confusion at `thresholds[i]`,
    i.e. counts over samples scoring strictly above it.
    """
    data.require_both_classes()
    order = np.argsort(-data.scores, kind="stable")
    s = data.scores[order]
    y = data.labels[order]
    # last index of each tied block = cumulative counts through that score
    block_end = np.nonzero(np.append(s[1:] != s[:-1], True))[0]
    tp = np.cumsum(y == 1)[block_end]
    fp = np.cumsum(y == 0)[block_end]
    tpr = np.concatenate(([0.0], tp / data.n_pos))
    fpr = np.concatenate(([0.0], fp / data.n_neg))
    # the point after block k is achieved by thresholding at the next
    # distinct score below it (or -inf after the last block)
    distinct = s[block_end]
    thresholds = np.concatenate(([np.inf], distinct[1:], [-np.inf]))
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds)


def confusion_at_threshold(data: LabeledScores, threshold: float) -> ConfusionCounts:
    """Confusion table for the strict rule: predict 1 iff score > threshold."""
    pred = data.scores > threshold
    pos = data.labels == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def auc_pair_oracle(data: LabeledScores) -> float:
    """AUC by direct pair counting: P(pos > neg) + 0.5 P(pos == neg).

    Quadratic in class sizes; intended as an independent cross-check of
    the trapezoid value on the ROC curve.
    """
    data.require_both_classes()
    pos = data.scores[data.labels == 1]
    neg = data.scores[data.labels == 0]
    greater = np.sum(pos[:, None] > neg[None, :], dtype=np.float64)
    ties = np.sum(pos[:, None] == neg[None, :], dtype=np.float64)
    return float((greater + 0.5 * ties) / (pos.size * neg.size))


def roc_at_fpr_grid(curve: RocCurve, fpr_grid: np.ndarray) -> np.ndarray:
    """TPR of the curve's upper envelope at the requested FPR values.

    Vertical segments (several TPRs at one FPR) contribute their top
    point; between distinct FPRs the curve is interpolated linearly,
    matching the trapezoid geometry used for the AUC.
    """
    fpr_grid = np.asarray(fpr_grid, dtype=np.float64)
    if np.any((fpr_grid < 0.0) | (fpr_grid > 1.0)):
        raise ValueError("FPR grid values must lie in [0, 1]")
    # np.interp with duplicated x anchors an interval on the last
    # duplicate to its left and the first to its right, and resolves an
    # exact hit to the last duplicate: precisely the envelope wanted.
    return np.interp(fpr_grid, curve.fpr, curve.tpr)
