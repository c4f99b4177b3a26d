"""One-vs-rest AUC, balanced accuracy, and optimal class-permutation alignment.

An attacker's score columns need not be in the same order as the true
classes. Alignment picks the column-to-class assignment that maximizes the
summed per-class metric, solved as a maximum-weight perfect matching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import AllOneClass, NoRows

# Two assignments whose totals differ by less than this are treated as tied.
TIE_TOL = 1e-12

METRIC_AUC = "auc"
METRIC_BACC = "balanced_accuracy"


@dataclass(frozen=True)
class AlignmentResult:
    """Optimal assignment of score columns to true classes.

    ``permutation[k]`` is the score column assigned to true class ``k``.
    ``per_class`` holds the aligned per-class metric, ``None`` for classes
    with no rows (those are left out of ``aligned_mean``).
    """

    attribute: str
    metric: str
    permutation: tuple[int, ...]
    per_class: tuple[float | None, ...]
    aligned_mean: float
    identity_mean: float
    class_counts: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.permutation)

    @property
    def m_auc_star(self) -> float:
        if self.metric != METRIC_AUC:
            raise AttributeError("m_auc_star is only defined for AUC alignments")
        return self.aligned_mean

    @property
    def per_class_auc_aligned(self) -> tuple[float | None, ...]:
        if self.metric != METRIC_AUC:
            raise AttributeError("per-class AUC is only defined for AUC alignments")
        return self.per_class

    @property
    def absent_classes(self) -> tuple[int, ...]:
        return tuple(k for k, c in enumerate(self.class_counts) if c == 0)

    def to_json(self) -> dict:
        return {
            "attribute": self.attribute,
            "metric": self.metric,
            "permutation": list(self.permutation),
            "per_class": list(self.per_class),
            "aligned_mean": self.aligned_mean,
            "identity_mean": self.identity_mean,
            "class_counts": list(self.class_counts),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AlignmentResult":
        return cls(obj["attribute"], obj["metric"], tuple(obj["permutation"]),
                   tuple(obj["per_class"]), obj["aligned_mean"], obj["identity_mean"],
                   tuple(obj["class_counts"]))


def ovr_auc(scores, positives) -> float:
    """Mann-Whitney AUC of ``scores`` for the ``positives`` mask; ties count 1/2."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1, 1)
    positives = np.asarray(positives, dtype=bool).ravel()
    if scores.shape[0] != positives.shape[0]:
        raise ValueError("scores and mask differ in length")
    n_pos = int(positives.sum())
    n_neg = positives.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise AllOneClass("AUC needs at least one positive and one negative")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    rank2 = int(kernels.class_rank_sums(scores, positives.astype(np.intp), 2)[1, 0])
    return (rank2 - n_pos * (n_pos + 1)) / (2 * n_pos * n_neg)


def auc_matrix(scores, labels, k: int) -> tuple[np.ndarray, np.ndarray]:
    """``W[c, j]`` = AUC of score column ``j`` for class ``c`` versus the rest.

    Rows for classes with no samples (or covering every sample) are 0.5.
    Returns ``(W, class_counts)``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    n = labels.size
    counts = np.bincount(labels, minlength=k)
    rank2 = kernels.class_rank_sums(scores, labels, k)
    w = np.full((k, k), 0.5)
    for c in range(k):
        n_pos = int(counts[c])
        n_neg = n - n_pos
        if n_pos and n_neg:
            w[c] = (rank2[c] - n_pos * (n_pos + 1)) / (2 * n_pos * n_neg)
    return w, counts


def optimal_assignment(weights, tol: float = TIE_TOL) -> tuple[int, ...]:
    """Lexicographically smallest permutation among the maximum-weight ones."""
    w = np.asarray(weights, dtype=np.float64)
    k = w.shape[0]
    if w.shape != (k, k):
        raise ValueError("weight matrix must be square")
    if k == 0:
        return ()
    best = _assignment_value(w)
    chosen: list[int] = []
    free = list(range(k))
    prefix = 0.0
    for row in range(k):
        rest_rows = list(range(row + 1, k))
        for col in free:
            cols = [c for c in free if c != col]
            value = prefix + w[row, col]
            if rest_rows:
                value += _assignment_value(w[np.ix_(rest_rows, cols)])
            if value >= best - tol:
                chosen.append(col)
                free.remove(col)
                prefix += w[row, col]
                break
        else:  # pragma: no cover - the optimum always passes through some column
            raise RuntimeError("assignment refinement failed")
    return tuple(chosen)


def _assignment_value(w: np.ndarray) -> float:
    perm = kernels.hungarian_max(w)
    return float(sum(w[i, perm[i]] for i in range(w.shape[0])))


def _finish(attribute, metric, w, counts, present) -> AlignmentResult:
    k = w.shape[0]
    perm = optimal_assignment(w)
    per_class = tuple(float(w[c, perm[c]]) if present[c] else None for c in range(k))
    aligned = [v for v in per_class if v is not None]
    ident = [float(w[c, c]) for c in range(k) if present[c]]
    return AlignmentResult(
        attribute=attribute,
        metric=metric,
        permutation=perm,
        per_class=per_class,
        aligned_mean=math.fsum(aligned) / len(aligned),
        identity_mean=math.fsum(ident) / len(ident),
        class_counts=tuple(int(c) for c in counts),
    )


def align_permutation(scores, labels, k: int | None = None, attribute: str = "") -> AlignmentResult:
    """Permutation-aligned mean one-vs-rest AUC over the classes present.

    ``scores`` is N x K, ``labels`` holds true class indices in ``[0, K)``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    if k is None:
        k = scores.shape[1]
    if scores.ndim != 2 or scores.shape != (labels.size, k):
        raise ValueError(f"scores must be N x {k} with N = len(labels)")
    w, counts = auc_matrix(scores, labels, k)
    present = counts > 0
    if present.sum() < 2:
        raise AllOneClass(f"attribute {attribute!r}: fewer than two classes present")
    return _finish(attribute, METRIC_AUC, w, counts, present)


def macro_balanced_accuracy(hard_preds, labels, k: int) -> float:
    """Mean per-class recall over the true classes that occur (no alignment)."""
    preds = np.asarray(hard_preds, dtype=np.intp)
    labels = np.asarray(labels, dtype=np.intp)
    if labels.size == 0:
        raise NoRows("balanced accuracy needs at least one row")
    cm = kernels.confusion_counts(labels, preds, k)
    rows = cm.sum(axis=1)
    recalls = [cm[c, c] / rows[c] for c in range(k) if rows[c]]
    return math.fsum(recalls) / len(recalls)


def recall_matrix(hard_preds, labels, k: int) -> tuple[np.ndarray, np.ndarray]:
    """``W[c, j]`` = share of class-``c`` rows predicted as column ``j``."""
    preds = np.asarray(hard_preds, dtype=np.intp)
    labels = np.asarray(labels, dtype=np.intp)
    cm = kernels.confusion_counts(labels, preds, k)
    counts = cm.sum(axis=1)
    w = np.zeros((k, k))
    for c in range(k):
        if counts[c]:
            w[c] = cm[c] / counts[c]
    return w, counts


def align_balanced_accuracy(hard_preds, labels, k: int, attribute: str = "") -> AlignmentResult:
    """Balanced accuracy maximized over reinterpretations of predicted classes."""
    labels = np.asarray(labels, dtype=np.intp)
    if labels.size == 0:
        raise NoRows(f"attribute {attribute!r}: no rows")
    w, counts = recall_matrix(hard_preds, labels, k)
    present = counts > 0
    if present.sum() < 2:
        raise AllOneClass(f"attribute {attribute!r}: fewer than two classes present")
    return _finish(attribute, METRIC_BACC, w, counts, present)


def argmax_rows(scores) -> np.ndarray:
    """Column of the row maximum, lowest index on ties."""
    return np.argmax(np.asarray(scores, dtype=np.float64), axis=1).astype(np.intp)
