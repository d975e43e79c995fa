"""Confusion counts, precision/recall/f1/accuracy and cluster alignment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .dataset_io import ClassLabel
from .errors import EmptyCounts, EmptyInput, LengthMismatch

POSITIVE = ClassLabel.ANIMAL


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ScoreReport:
    """All four measures are percentages in [0, 100]."""

    precision: float
    recall: float
    f1: float
    accuracy: float

    def csv_row(self, descriptor: str) -> list[str]:
        return [descriptor] + [f"{v:.1f}" for v in (self.precision, self.recall, self.f1, self.accuracy)]


def _other(label: ClassLabel) -> ClassLabel:
    return ClassLabel.PLANT if label is ClassLabel.ANIMAL else ClassLabel.ANIMAL


def confusion(predicted: Sequence[ClassLabel], truth: Sequence[ClassLabel],
              positive: ClassLabel = POSITIVE) -> ConfusionCounts:
    if len(predicted) != len(truth):
        raise LengthMismatch(f"{len(predicted)} predictions for {len(truth)} labels")
    if not truth:
        raise EmptyInput("no samples to compare")
    tp = fp = fn = tn = 0
    for p, t in zip(predicted, truth):
        if p == positive:
            if t == positive:
                tp += 1
            else:
                fp += 1
        elif t == positive:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def score(c: ConfusionCounts) -> ScoreReport:
    if c.total == 0:
        raise EmptyCounts("cannot score zero samples")
    precision = 100.0 * c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = 100.0 * c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = 100.0 * (c.tp + c.tn) / c.total
    return ScoreReport(precision, recall, f1, accuracy)


def align_clusters(assignments: Sequence[int], truth: Sequence[ClassLabel],
                   positive: ClassLabel = POSITIVE):
    """Pick the cluster-to-class bijection for a two-cluster result.

    Both mappings are scored; the one with higher f1 wins, then higher
    accuracy, then ``{0: positive, 1: negative}``.  Returns
    ``(mapping, counts)``.
    """
    if len(assignments) != len(truth):
        raise LengthMismatch(f"{len(assignments)} assignments for {len(truth)} labels")
    if any(a not in (0, 1) for a in assignments):
        raise ValueError("cluster ids must be 0 or 1")
    negative = _other(positive)
    best = None
    for mapping in ({0: positive, 1: negative}, {0: negative, 1: positive}):
        counts = confusion([mapping[a] for a in assignments], truth, positive)
        s = score(counts)
        key = (s.f1, s.accuracy)
        if best is None or key > best[0]:
            best = (key, mapping, counts)
    return best[1], best[2]
