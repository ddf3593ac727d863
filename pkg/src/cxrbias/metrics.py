"""Confusion-matrix metrics and AUROC.

Binary reports use class 1 as the positive class. For K > 2 every metric is
the unweighted (macro) mean of the per-class one-vs-rest values, and the
report says so in ``averaging``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ShapeError, UndefinedMetricError

# Column order of the classification tables.
REPORT_COLUMNS = ("Accuracy", "Precision", "Recall", "AUROC", "F1 Score")


def confusion(true_labels: Sequence[int], predicted_labels: Sequence[int], K: int) -> np.ndarray:
    """``K x K`` counts; rows are true classes, columns predicted classes."""
    t = np.asarray(true_labels, dtype=np.intp).ravel()
    p = np.asarray(predicted_labels, dtype=np.intp).ravel()
    if t.shape != p.shape:
        raise ShapeError(f"{t.size} true labels but {p.size} predictions")
    if t.size and (min(t.min(), p.min()) < 0 or max(t.max(), p.max()) >= K):
        raise ShapeError(f"labels must lie in [0, {K})")
    cm = np.zeros((K, K), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def _safe_ratio(num: float, den: float) -> tuple[float, bool]:
    return (num / den, False) if den > 0 else (0.0, True)


def _f1(precision: float, recall: float) -> float:
    s = precision + recall
    return 2.0 * (precision * recall) / s if s > 0 else 0.0


@dataclass
class ClassMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    flags: list[str] = field(default_factory=list)


@dataclass
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auroc: float | None = None
    averaging: str = "binary"
    per_class: list[ClassMetrics] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def row(self) -> list[float | None]:
        return [self.accuracy, self.precision, self.recall, self.auroc, self.f1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["columns"] = dict(zip(REPORT_COLUMNS, self.row()))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self, name: str = "") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["Model", *REPORT_COLUMNS])
        w.writerow([name, *("" if v is None else f"{v:.4f}" for v in self.row())])
        return buf.getvalue()


def _one_vs_rest(cm: np.ndarray, k: int) -> tuple[int, int, int, int]:
    tp = int(cm[k, k])
    fp = int(cm[:, k].sum() - tp)
    fn = int(cm[k, :].sum() - tp)
    tn = int(cm.sum() - tp - fp - fn)
    return tp, fp, fn, tn


def _class_metrics(cm: np.ndarray, k: int) -> ClassMetrics:
    tp, fp, fn, tn = _one_vs_rest(cm, k)
    precision, p_bad = _safe_ratio(tp, tp + fp)
    recall, r_bad = _safe_ratio(tp, tp + fn)
    flags = (["precision_undefined"] if p_bad else []) + (["recall_undefined"] if r_bad else [])
    return ClassMetrics(tp, fp, fn, tn, precision, recall, _f1(precision, recall), flags)


def summarize(cm) -> MetricsReport:
    """Accuracy, precision, recall and F1 from a confusion matrix (no AUROC)."""
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] < 2:
        raise ShapeError(f"confusion matrix must be square with K >= 2, got {cm.shape}")
    total = cm.sum()
    if total <= 0:
        raise UndefinedMetricError("confusion matrix is empty")
    K = cm.shape[0]
    per_class = [_class_metrics(cm, k) for k in range(K)]
    if K == 2:
        pos = per_class[1]
        tp, fp, fn, tn = pos.tp, pos.fp, pos.fn, pos.tn
        accuracy = (tp + tn) / (tp + tn + fp + fn)
        flags = [f"class1:{f}" for f in pos.flags]
        return MetricsReport(accuracy, pos.precision, pos.recall, pos.f1, None, "binary",
                             per_class, flags)
    accuracy = float(np.trace(cm)) / float(total)
    flags = [f"class{k}:{f}" for k, c in enumerate(per_class) for f in c.flags]
    return MetricsReport(
        accuracy,
        float(np.mean([c.precision for c in per_class])),
        float(np.mean([c.recall for c in per_class])),
        float(np.mean([c.f1 for c in per_class])),
        None, "macro", per_class, flags)


def auroc(scores, labels) -> float:
    """Binary AUROC as the Mann-Whitney probability, ties earning half credit.

    ``labels`` are 0/1 (or booleans). Computed from mid-ranks in
    ``O(n log n)``.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(bool)
    if s.shape != y.shape:
        raise ShapeError(f"{s.size} scores but {y.size} labels")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs both positive and negative samples")
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auroc_macro(prob_matrix, labels) -> float:
    """Macro one-vs-rest AUROC over the columns of an ``(n, K)`` score matrix."""
    P = np.asarray(prob_matrix, dtype=np.float64)
    y = np.asarray(labels, dtype=np.intp)
    if P.ndim != 2:
        raise ShapeError("score matrix must be 2-D")
    K = P.shape[1]
    present = np.unique(y)
    if present.size < 2:
        raise UndefinedMetricError("AUROC needs at least two classes present")
    if K == 2:
        return auroc(P[:, 1], y == 1)
    return float(np.mean([auroc(P[:, k], y == k) for k in range(K)]))


def evaluate(true_labels, prob_matrix) -> MetricsReport:
    """Full report from true class indices and per-class scores (argmax predictions)."""
    P = np.asarray(prob_matrix, dtype=np.float64)
    y = np.asarray(true_labels, dtype=np.intp)
    report = summarize(confusion(y, P.argmax(axis=1), P.shape[1]))
    report.auroc = auroc_macro(P, y)
    return report
