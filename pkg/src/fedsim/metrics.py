"""Binary classification metrics with attack (label 1) as the positive class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricsReport:
    """Accuracy, precision, recall and F1 at a fixed threshold.

    ``degenerate`` names the metrics whose ratio was 0/0; those are reported as 0.0.
    """

    accuracy: float
    precision: float
    recall: float
    f1: float
    threshold: float
    n_samples: int
    degenerate: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "threshold": self.threshold,
            "n_samples": self.n_samples,
            "degenerate": list(self.degenerate),
        }


def confusion(predictions, labels, threshold: float = 0.5) -> ConfusionMatrix:
    """Tally a confusion matrix; a prediction counts as positive iff ``p >= threshold``."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels)
    if p.shape != y.shape:
        raise ShapeError(f"{p.shape} predictions vs {y.shape} labels")
    pred = p >= threshold
    pos = y == 1
    return ConfusionMatrix(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def _ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def report(cm: ConfusionMatrix, threshold: float = 0.5) -> MetricsReport:
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    degenerate = []
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    if precision is None:
        degenerate.append("precision")
        precision = 0.0
    if recall is None:
        degenerate.append("recall")
        recall = 0.0
    if precision + recall == 0:
        degenerate.append("f1")
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsReport(
        accuracy=(cm.tp + cm.tn) / cm.total,
        precision=precision,
        recall=recall,
        f1=f1,
        threshold=threshold,
        n_samples=cm.total,
        degenerate=tuple(degenerate),
    )


def evaluate(predictions, labels, threshold: float = 0.5) -> MetricsReport:
    return report(confusion(predictions, labels, threshold), threshold)
