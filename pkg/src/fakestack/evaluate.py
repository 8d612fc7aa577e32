"""Confusion counts and minority-class metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    positive_class: int | None = None
    support: dict = field(default_factory=dict)
    # names of the metrics that hit 0/0 and were reported as 0
    degenerate: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        d = asdict(self)
        d["support"] = {str(k): v for k, v in self.support.items()}
        d["degenerate"] = list(self.degenerate)
        return d


def confusion(y_true, y_pred, positive=1) -> Confusion:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {len(y_true)} true labels vs {len(y_pred)} predictions")
    t, p = y_true == positive, y_pred == positive
    return Confusion(int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(t & ~p)), int(np.sum(~t & ~p)))


def _ratio(num, den, name, degenerate):
    if den == 0:
        degenerate.append(name)
        return 0.0
    return num / den


def f1_from(precision: float, recall: float) -> float:
    s = precision + recall
    return 2.0 * precision * recall / s if s > 0 else 0.0


def metrics(c: Confusion, positive_class=None, support: dict | None = None) -> MetricsReport:
    """Accuracy, precision, recall and F1 for the positive class; any 0/0 is 0."""
    degenerate: list[str] = []
    acc = _ratio(c.tp + c.tn, c.total, "accuracy", degenerate)
    prec = _ratio(c.tp, c.tp + c.fp, "precision", degenerate)
    rec = _ratio(c.tp, c.tp + c.fn, "recall", degenerate)
    if prec + rec == 0:
        degenerate.append("f1")
    return MetricsReport(acc, prec, rec, f1_from(prec, rec), positive_class, dict(support or {}), tuple(degenerate))


def evaluate(y_true, y_pred, positive=1) -> MetricsReport:
    y_true = np.asarray(y_true)
    labels, counts = np.unique(y_true, return_counts=True)
    support = {int(k): int(v) for k, v in zip(labels, counts)}
    return metrics(confusion(y_true, y_pred, positive), positive, support)


def minority_label(y_train, fallback=None, default: int = 1) -> int:
    """The rarer label in ``y_train``; on a tie defer to ``fallback`` labels, then ``default``."""
    labels, counts = np.unique(np.asarray(y_train), return_counts=True)
    if len(labels) == 2 and counts[0] != counts[1]:
        return int(labels[np.argmin(counts)])
    if fallback is not None:
        return minority_label(fallback, None, default)
    return default
