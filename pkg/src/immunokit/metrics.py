"""Binary classification metrics: confusion matrix, derived scores, ROC-AUC,
and precision-recall curves.

Metrics with an empty denominator are reported as None (undefined), never
coerced to zero.

Worked reference: counts tp=2434, tn=2448, fp=53, fn=65 give accuracy
0.9764, precision 0.9787, recall 0.9740, F1 0.9763. Mind the rounding trap
at two decimals: these counts round to precision 0.98 and recall 0.97, and
summaries quoting "precision 0.97, recall 0.98" for such a matrix have
transposed the two.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata


@dataclass
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_csv(self, path):
        # 2x2 layout: rows = actual (pos, neg), columns = predicted (pos, neg)
        text = (",pred_pos,pred_neg\n"
                f"actual_pos,{self.tp},{self.fn}\n"
                f"actual_neg,{self.fp},{self.tn}\n")
        Path(path).write_text(text, encoding="utf-8")


@dataclass
class MetricReport:
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


def _as_arrays(labels, probs):
    labels = np.asarray(labels)
    probs = np.asarray(probs, dtype=np.float64)
    if labels.size == 0:
        raise ValueError("empty batch")
    if labels.shape != probs.shape:
        raise ValueError(f"label/prob length mismatch: {labels.shape} vs {probs.shape}")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    return labels.astype(int), probs


def confusion(labels, probs, threshold: float = 0.5) -> ConfusionMatrix:
    """Counts with prob >= threshold treated as a positive prediction."""
    labels, probs = _as_arrays(labels, probs)
    pred = (probs >= threshold).astype(int)
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (labels == 1))),
        tn=int(np.sum((pred == 0) & (labels == 0))),
        fp=int(np.sum((pred == 1) & (labels == 0))),
        fn=int(np.sum((pred == 0) & (labels == 1))),
    )


def derived_metrics(cm: ConfusionMatrix) -> MetricReport:
    """Accuracy/precision/recall/F1; a metric whose denominator is zero is
    None rather than 0."""
    if cm.total == 0:
        raise ValueError("all-zero confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else None
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = None
    return MetricReport(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


def roc_auc(labels, probs) -> float:
    """Rank-based (Mann-Whitney) AUC; tied scores contribute one half."""
    labels, probs = _as_arrays(labels, probs)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present")
    ranks = rankdata(probs)  # average rank on ties
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_curve(labels, probs) -> list[tuple[float, float]]:
    """(false positive rate, true positive rate) pairs over all distinct
    thresholds, sorted by FPR ascending; includes the (0,0) and (1,1) ends."""
    labels, probs = _as_arrays(labels, probs)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_curve needs both classes present")
    points = {(0.0, 0.0), (1.0, 1.0)}
    for t in np.unique(probs):
        pred = probs >= t
        tpr = float(np.sum(pred & (labels == 1)) / n_pos)
        fpr = float(np.sum(pred & (labels == 0)) / n_neg)
        points.add((fpr, tpr))
    return sorted(points)


def pr_curve(labels, probs, points: int = 50) -> list[tuple[float, float]]:
    """(recall, precision) pairs at `points` quantile thresholds of the
    scores, sorted by recall ascending."""
    labels, probs = _as_arrays(labels, probs)
    if labels.sum() == 0:
        raise ValueError("pr_curve needs at least one positive label")
    if points < 1:
        raise ValueError(f"points must be >= 1, got {points}")
    qs = np.quantile(probs, np.linspace(0.0, 1.0, points))
    best: dict[float, float] = {}
    for t in np.unique(qs):
        pred = probs >= t
        tp = int(np.sum(pred & (labels == 1)))
        fp = int(np.sum(pred & (labels == 0)))
        if tp + fp == 0:
            continue
        recall = float(tp / labels.sum())
        precision = float(tp / (tp + fp))
        # lowering the threshold at fixed recall only adds false positives;
        # keep the achievable frontier (max precision per recall level)
        if precision > best.get(recall, -1.0):
            best[recall] = precision
    return sorted(best.items())


def curve_to_csv(pairs: list[tuple[float, float]], path, header: str):
    lines = [header] + [f"{repr(a)},{repr(b)}" for a, b in pairs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_metrics_json(report: MetricReport, path, extra: dict | None = None):
    payload = report.to_dict()
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
