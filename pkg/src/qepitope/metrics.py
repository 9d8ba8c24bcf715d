"""ACC, ROC-AUC and MCC for +1/-1 labelled predictions."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateProblemError, ShapeError, SizeError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def swapped(self) -> "ConfusionCounts":
        """Counts after exchanging the roles of the two classes."""
        return ConfusionCounts(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


@dataclass(frozen=True)
class EvalReport:
    acc: float
    auc: float
    mcc: float
    confusion: ConfusionCounts
    model_kind: str

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(
            acc=float(d["acc"]),
            auc=float(d["auc"]),
            mcc=float(d["mcc"]),
            confusion=ConfusionCounts(**{k: int(v) for k, v in d["confusion"].items()}),
            model_kind=str(d["model_kind"]),
        )


def _labels(values, name):
    arr = np.asarray(values).reshape(-1)
    if not np.all(np.isin(arr, (-1, 1))):
        raise ValueError(f"{name} must contain only +1 and -1")
    return arr


def confusion(labels: Sequence[int], predictions: Sequence[int]) -> ConfusionCounts:
    y = _labels(labels, "labels")
    p = _labels(predictions, "predictions")
    if y.shape != p.shape:
        raise ShapeError(f"{len(y)} labels vs {len(p)} predictions")
    if y.size == 0:
        raise SizeError("nothing to evaluate")
    return ConfusionCounts(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == -1) & (p == 1))),
        tn=int(np.sum((y == -1) & (p == -1))),
        fn=int(np.sum((y == 1) & (p == -1))),
    )


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise SizeError("empty confusion matrix")
    return (c.tp + c.tn) / c.total


def mcc(c: ConfusionCounts) -> float:
    """Matthews correlation; 0 whenever a marginal of the table is empty."""
    if c.total == 0:
        raise SizeError("empty confusion matrix")
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def _split_scores(labels, scores):
    y = _labels(labels, "labels")
    s = np.asarray(scores, dtype=float).reshape(-1)
    if y.shape != s.shape:
        raise ShapeError(f"{len(y)} labels vs {len(s)} scores")
    pos, neg = s[y == 1], s[y == -1]
    if pos.size == 0 or neg.size == 0:
        raise DegenerateProblemError("ROC AUC needs both classes")
    return pos, neg


def roc_auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Mann-Whitney pair statistic: P(score_pos > score_neg) with ties counting 1/2."""
    pos, neg = _split_scores(labels, scores)
    # Count with integers so the result is an exact rational.
    neg_sorted = np.sort(neg)
    below = np.searchsorted(neg_sorted, pos, side="left")
    not_above = np.searchsorted(neg_sorted, pos, side="right")
    ties = not_above - below
    twice_u = int(2 * below.sum() + ties.sum())
    return twice_u / (2 * pos.size * neg.size)


def roc_curve(labels, scores):
    """(fpr, tpr) points of the ROC curve, thresholds swept from high to low."""
    pos, neg = _split_scores(labels, scores)
    s = np.asarray(scores, dtype=float)
    thresholds = np.unique(s)[::-1]
    tpr = [0.0]
    fpr = [0.0]
    for th in thresholds:
        tpr.append(float(np.sum(pos >= th)) / pos.size)
        fpr.append(float(np.sum(neg >= th)) / neg.size)
    return np.array(fpr), np.array(tpr)


def roc_auc_trapezoid(labels, scores) -> float:
    fpr, tpr = roc_curve(labels, scores)
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2))


def evaluate(labels, predictions, scores, model_kind: str) -> EvalReport:
    c = confusion(labels, predictions)
    return EvalReport(
        acc=accuracy(c),
        auc=roc_auc(labels, scores),
        mcc=mcc(c),
        confusion=c,
        model_kind=model_kind,
    )


# Published comparison rows (method, year, ACC, AUC, MCC); None = not reported.
# Shown next to run results for context only.
REFERENCE_ROWS = (
    ("ABCPred (ANN server)", 2005, "66%", "0.72", "0.2"),
    ("Continuous epitopes, recurrent neural network", 2006, "65%", "0.64", None),
    ("Improved linear B-cell epitope method", 2006, "65%", "0.70", None),
    ("PEPITO", 2008, "70%", "0.75", None),
    ("SVMTriP", 2012, "70%-75%", "0.74", "0.4"),
    ("BepiPred-2.0", 2017, "68%-72%", "0.74", None),
    ("Linear B-cell epitope CLI review", 2021, "65%-70%", "0.68-0.72", "0.3-0.4"),
    ("Structure-based local+global features", 2022, "75%", "0.76", "0.45"),
    ("Graph attention network", 2024, "78%", "0.8", "0.5"),
    ("QSVM (reference)", 2025, "70%", "0.71", "0.42"),
    ("VQC (reference)", 2025, "73%", "0.703", "0.148"),
)

REFERENCE_QSVM = {"acc": 0.70, "auc": 0.71, "mcc": 0.42}
REFERENCE_VQC = {"acc": 0.73, "auc": 0.703, "mcc": 0.148}
