"""End-to-end evaluation: tables in, :class:`SblsReport` out."""

from __future__ import annotations

import hashlib
import os
from pathlib import Path
from typing import Sequence

import numpy as np

from .attribute import SOFT, attribute_excess, p_attr
from .auc import align_balanced_accuracy, align_permutation, argmax_rows
from .data import (
    AttributeSchema,
    EvaluationConfig,
    LabelTable,
    ScoreTable,
    join,
    load_schema,
    load_tables,
    split_score_arg,
)
from .linkage import confusion_matrix, hard_predictions, mutual_information, p_assoc
from .report import AttributeDiagnostics, SblsReport, band_vulnerability, compose
from .subgroup import evaluate_subgroups, p_subgroup


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def evaluate(schema: AttributeSchema, score_tables: Sequence[ScoreTable], labels: LabelTable,
             config: EvaluationConfig | None = None, groups: Sequence[str] | None = None,
             name: str = "system", inputs: dict | None = None,
             subgroup_levels: str = "all") -> SblsReport:
    """Score one system.

    ``groups`` are the label fields whose value combinations define the
    subgroups; by default every schema attribute that has a label column.
    """
    config = config or EvaluationConfig()
    mode = config.score_mode
    order = {n: i for i, n in enumerate(schema.names)}
    tables = sorted(score_tables, key=lambda t: order[t.attribute])
    joined = [join(t, labels, schema) for t in tables]

    diagnostics = []
    for j in joined:
        attr = j.attribute
        if mode == SOFT:
            alignment = align_permutation(j.scores, j.labels, attr.k, attr.name)
            preds = hard_predictions(j.scores, alignment)
            band = band_vulnerability(alignment.aligned_mean)
        else:
            raw = argmax_rows(j.scores)
            alignment = align_balanced_accuracy(raw, j.labels, attr.k, attr.name)
            inverse = np.argsort(np.asarray(alignment.permutation))
            preds = inverse[raw].astype(np.intp)
            band = None
        leakage = attribute_excess(alignment, mode, attr.k)
        linkage = mutual_information(confusion_matrix(j.labels, preds, attr.k, attr.name))
        diagnostics.append(AttributeDiagnostics(attr.name, attr.k, j.n, alignment, leakage,
                                                linkage, band, j.excluded_no_label,
                                                j.excluded_no_score))

    if groups is None:
        groups = [n for n in schema.names if n in labels.fields]
    subgroups = evaluate_subgroups(labels, joined, groups, config.min_subgroup_size,
                                   mode=mode,
                                   schema=schema, levels=subgroup_levels)
    fields = [f for f in schema.names if f in groups] + [f for f in groups if f not in schema]

    return compose(
        p_attr([d.leakage for d in diagnostics]),
        p_assoc([d.linkage for d in diagnostics]),
        p_subgroup(subgroups, config.omega),
        config,
        name=name,
        attributes=tuple(diagnostics),
        subgroups=tuple(subgroups),
        grouping_fields=tuple(fields),
        inputs=inputs or {},
    )


def evaluate_files(schema_path, score_paths: Sequence, label_path,
                   config: EvaluationConfig | None = None, groups: Sequence[str] | None = None,
                   name: str = "system", subgroup_levels: str = "all") -> SblsReport:
    """Load inputs from disk and score them; input digests go into the report."""
    schema = load_schema(schema_path)
    tables, labels = load_tables(score_paths, label_path, schema)
    scores = {}
    for item, table in zip(score_paths, _tables_by_arg(score_paths, tables)):
        path = split_score_arg(item)[1]
        scores[table.attribute] = {"path": str(path), "sha256": sha256_file(path)}
    inputs = {
        "schema": {"path": str(schema_path), "sha256": sha256_file(schema_path)},
        "labels": {"path": str(label_path), "sha256": sha256_file(label_path)},
        "scores": dict(sorted(scores.items(), key=lambda kv: schema.names.index(kv[0]))),
    }
    return evaluate(schema, tables, labels, config, groups, name, inputs, subgroup_levels)


def _tables_by_arg(score_paths, tables):
    by_source = {Path(t.source): t for t in tables}
    return [by_source[split_score_arg(item)[1]] for item in score_paths]
