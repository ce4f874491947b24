"""Binary classification metrics in the F1 / precision / recall / accuracy layout, plus ROC-AUC."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import DegenerateTruth, LengthMismatch


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int

    def as_dict(self) -> dict:
        return asdict(self)


def f1_from(precision: float, recall: float) -> float:
    s = precision + recall
    return 2.0 * precision * recall / s if s > 0 else 0.0


def roc_curve(truth, scores) -> tuple[np.ndarray, np.ndarray]:
    """(fpr, tpr) with one point per distinct score, highest threshold first."""
    truth = np.asarray(truth, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], truth[order]
    tps = np.cumsum(y)
    fps = np.cumsum(1 - y)
    last = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tpr = np.r_[0.0, tps[last] / tps[-1]]
    fpr = np.r_[0.0, fps[last] / fps[-1]]
    return fpr, tpr


def roc_auc(truth, scores) -> float:
    """Trapezoidal area under the ROC curve; tied scores form one step."""
    truth = np.asarray(truth, dtype=np.int64)
    if truth.min() == truth.max():
        raise DegenerateTruth("ROC-AUC needs both classes in the ground truth")
    fpr, tpr = roc_curve(truth, scores)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def confusion(truth, labels) -> tuple[int, int, int, int]:
    truth = np.asarray(truth, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    tp = int(np.sum((labels == 1) & (truth == 1)))
    fp = int(np.sum((labels == 1) & (truth == 0)))
    tn = int(np.sum((labels == 0) & (truth == 0)))
    fn = int(np.sum((labels == 0) & (truth == 1)))
    return tp, fp, tn, fn


def evaluate(labels, truth, scores=None) -> Metrics:
    """Confusion-matrix metrics; AUC is ``None`` without scores or with one-class truth."""
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape != truth.shape or (scores is not None and np.shape(scores) != truth.shape):
        raise LengthMismatch("predictions and truth differ in length")
    if truth.size == 0:
        raise LengthMismatch("no predictions to evaluate")
    tp, fp, tn, fn = confusion(truth, labels)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    auc = None
    if scores is not None:
        try:
            auc = roc_auc(truth, scores)
        except DegenerateTruth:
            auc = None
    return Metrics(
        accuracy=(tp + tn) / truth.size,
        precision=precision,
        recall=recall,
        f1=f1_from(precision, recall),
        roc_auc=auc,
        tp=tp, fp=fp, tn=tn, fn=fn,
    )
