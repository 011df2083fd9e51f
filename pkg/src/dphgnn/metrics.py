"""Classification metrics over node masks."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import EmptyMaskError, ShapeMismatchError

__all__ = ["MetricsResult", "metrics", "predictions_from_logits"]


class MetricsResult(NamedTuple):
    mean_accuracy: float
    macro_f1: float
    micro_f1: float


def predictions_from_logits(logits: np.ndarray) -> np.ndarray:
    """Argmax per row; ties resolve to the lowest class id."""
    return np.argmax(np.asarray(logits), axis=1).astype(np.int64)


def metrics(
    preds: np.ndarray,
    labels: np.ndarray,
    mask: np.ndarray,
    num_classes: int | None = None,
) -> MetricsResult:
    """Accuracy plus macro and micro F1 over the masked rows.

    Macro F1 averages per-class F1 uniformly; a class absent from both
    predictions and labels contributes 0. For single-label multiclass
    data micro F1 equals plain accuracy.

    Raises:
        EmptyMaskError: no rows selected.
    """
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    if preds.shape != labels.shape or mask.shape != labels.shape:
        raise ShapeMismatchError("preds, labels, and mask must share a shape")
    rows = np.flatnonzero(mask)
    if rows.size == 0:
        raise EmptyMaskError("metrics over an empty mask")
    p, y = preds[rows], labels[rows]
    if num_classes is None:
        num_classes = int(max(p.max(), y.max())) + 1

    acc = float(np.mean(p == y))
    f1s = []
    for cls in range(num_classes):
        tp = int(np.sum((p == cls) & (y == cls)))
        fp = int(np.sum((p == cls) & (y != cls)))
        fn = int(np.sum((p != cls) & (y == cls)))
        f1s.append(0.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn))
    tp_all = int(np.sum(p == y))
    micro = 2 * tp_all / (2 * tp_all + (rows.size - tp_all) + (rows.size - tp_all))
    return MetricsResult(acc, float(np.mean(f1s)), float(micro))
