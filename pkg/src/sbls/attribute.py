"""Attribute inference protection (P_attr).

Each attribute contributes its normalized excess over chance: for AUC the
chance level is 0.5, for balanced accuracy it is 1/K. Both are rescaled so
that 1 means the attacker recovers the attribute perfectly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .auc import METRIC_AUC, METRIC_BACC, AlignmentResult
from .errors import EmptyAttributeSet

SOFT = "soft_scores"
HARD = "hard_predictions"


@dataclass(frozen=True)
class AttributeLeakage:
    attribute: str
    metric_value: float
    excess_over_chance: float
    mode: str

    @property
    def m_auc_star(self) -> float:
        return self.metric_value

    def to_json(self) -> dict:
        return {"attribute": self.attribute, "metric_value": self.metric_value,
                "excess_over_chance": self.excess_over_chance, "mode": self.mode}

    @classmethod
    def from_json(cls, obj: dict) -> "AttributeLeakage":
        return cls(obj["attribute"], obj["metric_value"], obj["excess_over_chance"], obj["mode"])


def auc_excess(m_auc: float) -> float:
    """max(0, mAUC - 0.5) / 0.5"""
    return max(0.0, m_auc - 0.5) / 0.5


def bacc_excess(bacc: float, k: int) -> float:
    """max(0, bacc - 1/K) / (1 - 1/K)"""
    chance = 1.0 / k
    return max(0.0, bacc - chance) / (1.0 - chance)


def attribute_excess(alignment: AlignmentResult, mode: str | None = None,
                     k: int | None = None) -> AttributeLeakage:
    if mode is None:
        mode = SOFT if alignment.metric == METRIC_AUC else HARD
    if k is None:
        k = alignment.k
    value = alignment.aligned_mean
    if mode == SOFT:
        if alignment.metric != METRIC_AUC:
            raise ValueError("soft-score mode needs an AUC alignment")
        excess = auc_excess(value)
    elif mode == HARD:
        if alignment.metric != METRIC_BACC:
            raise ValueError("hard-prediction mode needs a balanced-accuracy alignment")
        excess = bacc_excess(value, k)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return AttributeLeakage(alignment.attribute, value, min(excess, 1.0), mode)


def p_attr(per_attribute: Sequence[AttributeLeakage]) -> float:
    """1 - mean excess; 1 means chance-level inference on every attribute."""
    if not per_attribute:
        raise EmptyAttributeSet("P_attr needs at least one attribute")
    mean = math.fsum(a.excess_over_chance for a in per_attribute) / len(per_attribute)
    return min(1.0, max(0.0, 1.0 - mean))
