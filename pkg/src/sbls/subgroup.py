"""Subgroup protection (P_subgroup).

Rows are partitioned by the values of chosen label fields. Within each cell
the attacker metric is re-aligned from scratch on that cell's rows only, so
every group faces its own best-case attacker.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .attribute import HARD, SOFT, auc_excess, bacc_excess
from .auc import align_balanced_accuracy, align_permutation, argmax_rows
from .data import AttributeSchema, JoinedAttribute, LabelTable
from .errors import NoScoreableAttribute, NoValidSubgroup, UnknownField

SubgroupKey = tuple[tuple[str, str], ...]


def key_str(key: SubgroupKey) -> str:
    return ";".join(f"{f}={v}" for f, v in key)


def parse_key(text: str) -> SubgroupKey:
    return tuple(tuple(part.split("=", 1)) for part in text.split(";")) if text else ()


@dataclass(frozen=True)
class SubgroupCell:
    key: SubgroupKey
    rows: np.ndarray  # indices into the LabelTable
    excluded: bool

    @property
    def n(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class SubgroupReport:
    """Leakage of one cell; ``leakage`` is None when the cell is excluded."""

    key: SubgroupKey
    n: int
    leakage: float | None
    per_attribute: tuple[tuple[str, float | None], ...]
    excluded_reason: str | None = None

    @property
    def level(self) -> int:
        return len(self.key)

    @property
    def included(self) -> bool:
        return self.leakage is not None

    def to_json(self) -> dict:
        return {
            "key": key_str(self.key),
            "fields": [f for f, _ in self.key],
            "n": self.n,
            "leakage": self.leakage,
            "per_attribute": [[a, v] for a, v in self.per_attribute],
            "excluded_reason": self.excluded_reason,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SubgroupReport":
        return cls(parse_key(obj["key"]), obj["n"], obj["leakage"],
                   tuple((a, v) for a, v in obj["per_attribute"]), obj["excluded_reason"])


def _field_order(labels: LabelTable, schema: AttributeSchema | None, fields: Sequence[str]):
    rank = {}
    if schema is not None:
        rank.update({n: i for i, n in enumerate(schema.names)})
    base = len(rank)
    rank.update({f: base + i for i, f in enumerate(labels.fields) if f not in rank})
    return sorted(dict.fromkeys(fields), key=lambda f: rank[f])


def _value_rank(field: str, schema: AttributeSchema | None):
    if schema is not None and field in schema:
        classes = schema[field].classes
        return lambda v: (classes.index(v), v)
    return lambda v: (0, v)


def enumerate_subgroups(labels: LabelTable, grouping_fields: Sequence[str], min_size: int,
                        schema: AttributeSchema | None = None) -> list[SubgroupCell]:
    """One cell per observed value combination of ``grouping_fields``.

    Rows missing any grouping value belong to no cell. Cells smaller than
    ``min_size`` are returned with ``excluded=True``. Fields are put in
    schema order, cells sorted by class order (metadata values lexically).
    """
    for f in grouping_fields:
        if f not in labels.fields:
            raise UnknownField(f"grouping field {f!r} is not a label column", labels.source)
    fields = _field_order(labels, schema, grouping_fields)
    if not fields:
        rows = np.arange(labels.n, dtype=np.intp)
        return [SubgroupCell((), rows, labels.n < min_size)] if labels.n else []
    cols = [labels.column(f) for f in fields]
    buckets: dict[tuple, list[int]] = {}
    for i in range(labels.n):
        values = tuple(c[i] for c in cols)
        if any(v is None for v in values):
            continue
        buckets.setdefault(values, []).append(i)
    ranks = [_value_rank(f, schema) for f in fields]
    out = []
    for values in sorted(buckets, key=lambda vs: tuple(r(v) for r, v in zip(ranks, vs))):
        rows = np.asarray(buckets[values], dtype=np.intp)
        rows.setflags(write=False)
        out.append(SubgroupCell(tuple(zip(fields, values)), rows, len(rows) < min_size))
    return out


def grouping_levels(fields: Sequence[str]) -> list[tuple[str, ...]]:
    """Every non-empty subset of ``fields``: marginals first, full intersection last."""
    fields = list(fields)
    return [c for r in range(1, len(fields) + 1) for c in itertools.combinations(fields, r)]


def _restrict(joined: JoinedAttribute, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mask = np.isin(joined.label_rows, rows)
    return joined.scores[mask], joined.labels[mask]


def subgroup_leakage(cell: SubgroupCell, joined: Sequence[JoinedAttribute],
                     mode: str = SOFT) -> SubgroupReport:
    """Mean normalized excess over the attributes that vary inside the cell.

    Attributes with fewer than two classes among the cell's rows are listed
    with ``None`` and left out of the mean.
    """
    per_attr = []
    excesses = []
    for j in joined:
        scores, labels = _restrict(j, cell.rows)
        if np.count_nonzero(np.bincount(labels, minlength=j.k)) < 2:
            per_attr.append((j.attribute.name, None))
            continue
        if mode == SOFT:
            res = align_permutation(scores, labels, j.k, j.attribute.name)
            excess = auc_excess(res.aligned_mean)
        elif mode == HARD:
            res = align_balanced_accuracy(argmax_rows(scores), labels, j.k, j.attribute.name)
            excess = bacc_excess(res.aligned_mean, j.k)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        per_attr.append((j.attribute.name, res.aligned_mean))
        excesses.append(min(excess, 1.0))
    if not excesses:
        raise NoScoreableAttribute(f"subgroup {key_str(cell.key) or '<all>'}: "
                                   "no attribute has two or more classes inside the group")
    return SubgroupReport(cell.key, cell.n, math.fsum(excesses) / len(excesses), tuple(per_attr))


def evaluate_subgroups(labels: LabelTable, joined: Sequence[JoinedAttribute],
                       grouping_fields: Sequence[str], min_size: int, mode: str = SOFT,
                       schema: AttributeSchema | None = None,
                       levels: str = "all") -> list[SubgroupReport]:
    """Reports for every cell of every grouping level (or only the full one).

    ``levels`` is ``"all"`` (each non-empty subset of the grouping fields)
    or ``"full"`` (only the complete intersection).
    """
    fields = _field_order(labels, schema, grouping_fields)
    if levels == "all":
        combos = grouping_levels(fields)
    elif levels == "full":
        combos = [tuple(fields)]
    else:
        raise ValueError(f"levels must be 'all' or 'full', got {levels!r}")
    reports = []
    for combo in combos:
        for cell in enumerate_subgroups(labels, combo, min_size, schema):
            empty = tuple((j.attribute.name, None) for j in joined)
            if cell.excluded:
                reports.append(SubgroupReport(cell.key, cell.n, None, empty,
                                              f"n={cell.n} < {min_size}"))
                continue
            try:
                reports.append(subgroup_leakage(cell, joined, mode))
            except NoScoreableAttribute:
                reports.append(SubgroupReport(cell.key, cell.n, None, empty,
                                              "no scored attribute varies within the group"))
    return reports


def p_subgroup(reports: Sequence[SubgroupReport], omega: float = 0.7) -> float:
    """omega * (1 - worst L) + (1 - omega) * min(1 - L) / max(1 - L) over included cells.

    When every cell is fully leaked the ratio is 0/0; the result is then 0.
    """
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must be in [0, 1], got {omega!r}")
    leaks = [r.leakage for r in reports if r.leakage is not None]
    if not leaks:
        raise NoValidSubgroup("no subgroup is large enough and scoreable")
    # exact rational evaluation, rounded once
    w = Fraction(omega)
    protection = [1 - Fraction(v) for v in leaks]
    hi = max(protection)
    if hi == 0:
        return 0.0
    value = w * (1 - Fraction(max(leaks))) + (1 - w) * (min(protection) / hi)
    return min(1.0, max(0.0, float(value)))


def worst_subgroup(reports: Sequence[SubgroupReport]) -> SubgroupReport | None:
    """Included cell with the largest leakage; first in canonical order on ties."""
    best = None
    for r in reports:
        if r.leakage is not None and (best is None or r.leakage > best.leakage):
            best = r
    return best


def heatmap_csv(reports: Sequence[SubgroupReport], attributes: Sequence[str]) -> str:
    """``group_key,n,L_g,<attr>_auc...``; excluded cells keep empty value cells."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group_key", "n", "L_g", *(f"{a}_auc" for a in attributes)])
    for r in reports:
        per = dict(r.per_attribute)
        w.writerow([key_str(r.key), r.n, "" if r.leakage is None else repr(r.leakage),
                    *("" if per.get(a) is None else repr(per[a]) for a in attributes)])
    return buf.getvalue()
