"""Accuracy and macro-averaged precision, recall and F1.

A class with no predicted (precision) or no true (recall) instances
contributes 0 to the macro average; a warning is logged once per call.
"""

from __future__ import annotations

import logging
from typing import Hashable, Sequence

logger = logging.getLogger(__name__)


def _check(y_true: Sequence, y_pred: Sequence) -> None:
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted labels")


def accuracy(y_true: Sequence, y_pred: Sequence) -> float:
    _check(y_true, y_pred)
    if len(y_true) == 0:
        raise ValueError("accuracy of an empty prediction set")
    hits = sum(1 for t, p in zip(y_true, y_pred) if t == p)
    return hits / len(y_true)


def _counts(y_true, y_pred, classes):
    tp = {c: 0 for c in classes}
    fp = dict(tp)
    fn = dict(tp)
    for t, p in zip(y_true, y_pred):
        if t == p:
            if t in tp:
                tp[t] += 1
        else:
            if p in fp:
                fp[p] += 1
            if t in fn:
                fn[t] += 1
    return tp, fp, fn


def per_class_scores(y_true: Sequence, y_pred: Sequence, classes: Sequence[Hashable]):
    """Per-class (precision, recall, f1) lists in ``classes`` order."""
    _check(y_true, y_pred)
    classes = list(classes)
    if not classes:
        raise ValueError("classes must be non-empty")
    tp, fp, fn = _counts(y_true, y_pred, classes)
    precision, recall, f1 = [], [], []
    undefined = []
    for c in classes:
        p = tp[c] / (tp[c] + fp[c]) if tp[c] + fp[c] else 0.0
        r = tp[c] / (tp[c] + fn[c]) if tp[c] + fn[c] else 0.0
        if tp[c] + fp[c] == 0 or tp[c] + fn[c] == 0:
            undefined.append(c)
        precision.append(p)
        recall.append(r)
        f1.append(2 * p * r / (p + r) if p + r else 0.0)
    if undefined:
        logger.warning("precision/recall undefined for class(es) %s; counted as 0", undefined)
    return precision, recall, f1


def macro_precision(y_true: Sequence, y_pred: Sequence, classes: Sequence[Hashable]) -> float:
    p, _, _ = per_class_scores(y_true, y_pred, classes)
    return sum(p) / len(p)


def macro_recall(y_true: Sequence, y_pred: Sequence, classes: Sequence[Hashable]) -> float:
    _, r, _ = per_class_scores(y_true, y_pred, classes)
    return sum(r) / len(r)


def macro_f1(y_true: Sequence, y_pred: Sequence, classes: Sequence[Hashable]) -> float:
    _, _, f = per_class_scores(y_true, y_pred, classes)
    return sum(f) / len(f)


def all_metrics(y_true: Sequence, y_pred: Sequence, classes: Sequence[Hashable]) -> dict[str, float]:
    p, r, f = per_class_scores(y_true, y_pred, classes)
    return {
        "accuracy": accuracy(y_true, y_pred),
        "precision_macro": sum(p) / len(p),
        "recall_macro": sum(r) / len(r),
        "f1_macro": sum(f) / len(f),
    }
