"""Systematic linkage (P_assoc): mutual information between true classes and
permutation-aligned hard predictions, estimated from the confusion matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .auc import AlignmentResult
from .errors import EmptyAttributeSet, EmptyMatrix

# Normalized MI this close to 0 or 1 is snapped onto the bound.
SNAP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true classes, columns aligned predicted classes."""

    attribute: str
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if (counts < 0).any():
            raise ValueError("confusion counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.attribute == other.attribute and np.array_equal(self.counts, other.counts)


@dataclass(frozen=True)
class LinkageResult:
    attribute: str
    mutual_information: float
    normalized_mi: float
    entropy_true: float
    entropy_pred: float
    confusion: tuple[tuple[int, ...], ...] = ()

    def to_json(self) -> dict:
        return {
            "attribute": self.attribute,
            "mutual_information": self.mutual_information,
            "normalized_mi": self.normalized_mi,
            "entropy_true": self.entropy_true,
            "entropy_pred": self.entropy_pred,
            "confusion": [list(r) for r in self.confusion],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LinkageResult":
        return cls(obj["attribute"], obj["mutual_information"], obj["normalized_mi"],
                   obj["entropy_true"], obj["entropy_pred"],
                   tuple(tuple(r) for r in obj.get("confusion", ())))


def hard_predictions(scores, alignment: AlignmentResult) -> np.ndarray:
    """Argmax over the aligned score columns; ties go to the lowest class."""
    scores = np.asarray(scores, dtype=np.float64)
    aligned = scores[:, list(alignment.permutation)]
    return np.argmax(aligned, axis=1).astype(np.intp)


def confusion_matrix(labels, preds, k: int, attribute: str = "") -> ConfusionMatrix:
    return ConfusionMatrix(attribute, kernels.confusion_counts(labels, preds, k))


def _entropy(counts, total: int) -> float:
    return math.fsum(-(c / total) * math.log(c / total) for c in counts if c)


def mutual_information(cm: ConfusionMatrix) -> LinkageResult:
    """Plug-in MI in nats, normalized by ln K and clamped to [0, 1]."""
    counts = [[int(x) for x in row] for row in cm.counts]
    total = sum(map(sum, counts))
    if total < 1:
        raise EmptyMatrix(f"attribute {cm.attribute!r}: confusion matrix is empty")
    k = cm.k
    rows = [sum(r) for r in counts]
    cols = [sum(r[j] for r in counts) for j in range(k)]
    # exact integer ratio per cell: n_kj * N / (n_k. * n_.j)
    terms = [c * math.log((c * total) / (rows[i] * cols[j]))
             for i, r in enumerate(counts) for j, c in enumerate(r) if c]
    mi = max(0.0, math.fsum(terms) / total)
    nmi = min(1.0, max(0.0, mi / math.log(k)))
    if nmi < SNAP_TOL:
        nmi = 0.0
    elif nmi > 1.0 - SNAP_TOL:
        nmi = 1.0
    return LinkageResult(cm.attribute, mi, nmi, _entropy(rows, total), _entropy(cols, total),
                         tuple(tuple(r) for r in counts))


def p_assoc(per_attribute: Sequence[LinkageResult]) -> float:
    """1 - mean normalized MI."""
    if not per_attribute:
        raise EmptyAttributeSet("P_assoc needs at least one attribute")
    mean = math.fsum(r.normalized_mi for r in per_attribute) / len(per_attribute)
    return min(1.0, max(0.0, 1.0 - mean))
