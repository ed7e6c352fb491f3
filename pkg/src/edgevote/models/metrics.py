"""Binary-classification metrics with class 1 as the positive class.

AUC comes from the Mann-Whitney rank statistic with midranks for ties,
which equals the trapezoidal area under the tie-grouped ROC curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import LengthMismatch


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}

    @classmethod
    def from_dict(cls, d: dict) -> "Confusion":
        return cls(tp=int(d["tp"]), fp=int(d["fp"]), tn=int(d["tn"]), fn=int(d["fn"]))


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f_measure: float
    auc: float
    confusion: Confusion
    roc_points: tuple[tuple[float, float], ...]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "auc": self.auc,
            "confusion": self.confusion.to_dict(),
            "roc_points": [list(p) for p in self.roc_points],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            accuracy=d["accuracy"],
            precision=d["precision"],
            recall=d["recall"],
            f_measure=d["f_measure"],
            auc=d["auc"],
            confusion=Confusion.from_dict(d["confusion"]),
            roc_points=tuple((float(x), float(y)) for x, y in d["roc_points"]),
        )


def _as_aligned(y_true, other, name: str):
    y_true = np.asarray(y_true, dtype=np.int64)
    other = np.asarray(other, dtype=np.float64)
    if len(y_true) != len(other):
        raise LengthMismatch(f"{len(y_true)} labels vs {len(other)} {name}")
    if len(y_true) == 0:
        raise LengthMismatch("empty evaluation set")
    return y_true, other


def confusion_counts(y_true, y_pred) -> Confusion:
    y_true, y_pred = _as_aligned(y_true, y_pred, "predictions")
    y_pred = y_pred.astype(np.int64)
    return Confusion(
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
    )


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def rank_auc(y_true, scores) -> float:
    """Probability a random positive outscores a random negative; ties
    count half. Returns 0.5 when either class is absent."""
    y_true, scores = _as_aligned(y_true, scores, "scores")
    n1 = int(np.sum(y_true == 1))
    n0 = len(y_true) - n1
    if n1 == 0 or n0 == 0:
        return 0.5

    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores), dtype=np.float64)
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1

    pos_rank_sum = float(np.sum(ranks[y_true == 1]))
    return (pos_rank_sum - n1 * (n1 + 1) / 2.0) / (n0 * n1)


def roc_points(y_true, scores) -> tuple[tuple[float, float], ...]:
    """(fpr, tpr) points from (0,0) to (1,1), one step per distinct score
    in descending order. Degenerates to ((0,0), (1,1)) with one class."""
    y_true, scores = _as_aligned(y_true, scores, "scores")
    n1 = int(np.sum(y_true == 1))
    n0 = len(y_true) - n1
    if n1 == 0 or n0 == 0:
        return ((0.0, 0.0), (1.0, 1.0))

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = y_true[order]

    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        group_pos = int(np.sum(sorted_labels[i : j + 1] == 1))
        tp += group_pos
        fp += (j + 1 - i) - group_pos
        points.append((fp / n0, tp / n1))
        i = j + 1
    return tuple(points)


def trapezoid_auc(points) -> float:
    """Trapezoidal area under a piecewise-linear (fpr, tpr) curve."""
    area = 0.0
    for (x1, y1), (x2, y2) in zip(points, points[1:]):
        area += (x2 - x1) * (y1 + y2) / 2.0
    return area


def evaluate(predictions, y_true) -> EvalReport:
    """Score a prediction list against true labels.

    Ranking metrics (AUC, ROC) use each prediction's class-1 probability.
    """
    labels = [p.label for p in predictions]
    scores = [p.probs[1] for p in predictions]
    conf = confusion_counts(y_true, labels)
    precision = _safe_div(conf.tp, conf.tp + conf.fp)
    recall = _safe_div(conf.tp, conf.tp + conf.fn)
    return EvalReport(
        accuracy=(conf.tp + conf.tn) / conf.total(),
        precision=precision,
        recall=recall,
        f_measure=_safe_div(2 * precision * recall, precision + recall),
        auc=rank_auc(y_true, scores),
        confusion=conf,
        roc_points=roc_points(y_true, scores),
    )
