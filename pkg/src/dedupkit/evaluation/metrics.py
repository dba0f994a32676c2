"""Confusion counts, rate metrics, F-beta and ROC / precision-recall curves."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..errors import DegenerateError, EmptyInputError, ParamError

DEFAULT_THRESHOLDS = tuple(float(t) for t in np.linspace(0.0, 1.0, 101))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def degenerate(self) -> list[str]:
        """Names of the rates whose denominator is zero."""
        out = []
        if self.tp + self.fn == 0:
            out.append("sensitivity")
        if self.fp + self.tn == 0:
            out.append("false_positive_rate")
        if self.tp + self.fp == 0:
            out.append("precision")
        return out


@dataclass(frozen=True)
class CurvePoint:
    threshold: float | None
    x: float
    y: float

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "x": self.x, "y": self.y}


def _arrays(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if len(s) != len(y):
        raise ParamError(f"{len(s)} scores but {len(y)} labels")
    if len(s) == 0:
        raise EmptyInputError("no scores given")
    if not np.isin(y, (0, 1)).all():
        raise ParamError("labels must be 0 or 1")
    return s, y.astype(np.int64)


def confusion(scores, labels, threshold: float) -> ConfusionCounts:
    """Predict positive iff ``score >= threshold``."""
    s, y = _arrays(scores, labels)
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    tn = int(np.sum(~pred & (y == 0)))
    return ConfusionCounts(tp, fp, tn, fn)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def sensitivity(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fn)


recall = sensitivity


def false_positive_rate(c: ConfusionCounts) -> float:
    return _ratio(c.fp, c.fp + c.tn)


def precision(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fp)


def f_beta(precision: float, recall: float, beta: float) -> float:
    """Weighted harmonic mean; recall counts ``beta`` times as much."""
    if not beta > 0:
        raise ParamError(f"beta must be positive, got {beta}")
    b2 = beta * beta
    den = b2 * precision + recall
    if den == 0:
        return 0.0
    return (1 + b2) * precision * recall / den


def _grouped_counts(s: np.ndarray, y: np.ndarray):
    """Cumulative (tp, fp) at each distinct score, highest score first."""
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tp = np.cumsum(y)[last_of_group]
    fp = np.cumsum(1 - y)[last_of_group]
    return s[last_of_group], tp, fp


def roc_curve(scores, labels) -> list[CurvePoint]:
    """(false positive rate, sensitivity) at every distinct threshold, from
    (0, 0) to (1, 1). Tied scores form a single step."""
    s, y = _arrays(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateError("ROC needs both classes")
    thr, tp, fp = _grouped_counts(s, y)
    points = [CurvePoint(None, 0.0, 0.0)]
    points += [CurvePoint(float(t), float(f / n_neg), float(p / n_pos)) for t, p, f in zip(thr, tp, fp)]
    if points[-1].x != 1.0 or points[-1].y != 1.0:
        points.append(CurvePoint(None, 1.0, 1.0))
    return points


def trapezoid_area(points: Sequence[CurvePoint]) -> float:
    x = np.array([p.x for p in points])
    y = np.array([p.y for p in points])
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2))


def roc_auc(scores, labels) -> float:
    return trapezoid_area(roc_curve(scores, labels))


def pr_curve(scores, labels) -> list[CurvePoint]:
    """(recall, precision) at every distinct threshold, highest first."""
    s, y = _arrays(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise DegenerateError("precision-recall needs at least one positive")
    thr, tp, fp = _grouped_counts(s, y)
    return [CurvePoint(float(t), float(p / n_pos), float(p / (p + f))) for t, p, f in zip(thr, tp, fp)]


def pr_auc(scores, labels) -> float:
    """Average precision: sum over thresholds of recall gain times precision."""
    points = pr_curve(scores, labels)
    area, prev_recall = 0.0, 0.0
    for p in points:
        area += (p.x - prev_recall) * p.y
        prev_recall = p.x
    return area


average_precision = pr_auc


@dataclass(frozen=True)
class FScorePoint:
    threshold: float
    f: float
    precision: float
    recall: float
    degenerate: bool

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "f": self.f, "precision": self.precision,
                "recall": self.recall, "degenerate": self.degenerate}


def fbeta_sweep(scores, labels, beta: float,
                thresholds: Iterable[float] = DEFAULT_THRESHOLDS) -> list[FScorePoint]:
    """F-beta over a threshold grid. Thresholds with no predicted positives are
    flagged degenerate (precision taken as 0)."""
    s, y = _arrays(scores, labels)
    out = []
    for t in thresholds:
        c = confusion(s, y, t)
        p, r = precision(c), sensitivity(c)
        out.append(FScorePoint(float(t), f_beta(p, r, beta), p, r, "precision" in c.degenerate()))
    return out
