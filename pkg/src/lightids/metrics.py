"""Detection-quality metrics and deployment-cost profiling.

Quality metrics come from a confusion matrix with rows as true classes.
Zero-denominator precision/recall/F1 are defined as 0. The binary false
positive rate treats attack (class 1) as positive; the multiclass FPR is
the macro average of per-class one-vs-rest FPRs. Cost metrics are the
serialized byte length, timed per-sample inference latency, and the
model's self-reported payload memory.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .models import TrainedModel, serialize


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (n_classes, n_classes) int64, rows = true class
    class_names: tuple[str, ...]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int,
              class_names: tuple[str, ...] | None = None) -> ConfusionMatrix:
    """Count matrix with counts[i, j] = |true i predicted j|."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise DataError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted")
    for name, arr in (("true", y_true), ("predicted", y_pred)):
        if len(arr) and (arr.min() < 0 or arr.max() >= n_classes):
            raise DataError(f"{name} labels out of range [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    if class_names is None:
        class_names = tuple(str(i) for i in range(n_classes))
    return ConfusionMatrix(counts=counts, class_names=tuple(class_names))


@dataclass(frozen=True)
class QualityReport:
    accuracy: float
    precision: tuple[float, ...]   # per class
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    precision_macro: float
    recall_macro: float
    f1_macro: float
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    fpr: float


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    nonzero = den > 0
    out[nonzero] = num[nonzero] / den[nonzero]
    return out


def quality(cm: ConfusionMatrix, task: str) -> QualityReport:
    """Standard classification metrics from a confusion matrix."""
    total = cm.total
    if total == 0:
        raise DataError("confusion matrix is empty")
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    support = counts.sum(axis=1)          # true counts per class
    predicted = counts.sum(axis=0)

    precision = _safe_div(tp, predicted)
    recall = _safe_div(tp, support)
    f1 = _safe_div(2 * precision * recall, precision + recall)

    weights = support / total
    fp = predicted - tp
    tn = total - support - fp
    per_class_fpr = _safe_div(fp, fp + tn)

    if task == "binary":
        if cm.n_classes != 2:
            raise DataError("binary quality requires a 2x2 confusion matrix")
        fpr = float(per_class_fpr[1])     # attack is the positive class
    else:
        fpr = float(per_class_fpr.mean())

    return QualityReport(
        accuracy=float(tp.sum() / total),
        precision=tuple(precision),
        recall=tuple(recall),
        f1=tuple(f1),
        precision_macro=float(precision.mean()),
        recall_macro=float(recall.mean()),
        f1_macro=float(f1.mean()),
        precision_weighted=float(precision @ weights),
        recall_weighted=float(recall @ weights),
        f1_weighted=float(f1 @ weights),
        fpr=fpr,
    )


@dataclass(frozen=True)
class CostReport:
    model_size_bytes: int
    latency_median_s: float        # per sample
    latency_p95_s: float
    accounted_memory_bytes: int


def profile_cost(model: TrainedModel, probe: np.ndarray, repeats: int = 30) -> CostReport:
    """Measure deployment cost on a probe batch.

    Three untimed warm-up passes, then ``repeats`` timed full-batch predict
    calls on a monotonic clock; per-sample latency is batch time divided by
    rows. Timing runs single-threaded in this harness so numbers stay
    comparable across families.
    """
    probe = np.asarray(probe)
    if probe.ndim != 2 or len(probe) == 0:
        raise DataError("probe must be a non-empty 2-D matrix")
    if repeats < 3:
        raise DataError(f"repeats must be >= 3, got {repeats}")

    for _ in range(3):
        model.predict(probe)
    times = np.empty(repeats, dtype=np.float64)
    for i in range(repeats):
        start = time.perf_counter()
        model.predict(probe)
        times[i] = (time.perf_counter() - start) / len(probe)

    return CostReport(
        model_size_bytes=len(serialize(model)),
        latency_median_s=float(np.percentile(times, 50)),
        latency_p95_s=float(np.percentile(times, 95)),
        accounted_memory_bytes=model.memory_bytes(),
    )
