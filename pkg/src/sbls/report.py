"""Composite score, vulnerability bands, and report serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import __version__
from .attribute import HARD, AttributeLeakage
from .auc import AlignmentResult
from .data import EvaluationConfig
from .errors import SBLSError, SchemaVersionError
from .linkage import LinkageResult
from .subgroup import SubgroupReport, key_str, worst_subgroup

SCHEMA_VERSION = 1

# Upper bounds (exclusive) on AUC excess over 0.5 for each band.
BANDS = (("Minimal", 0.01), ("Low", 0.05), ("Moderate", 0.15), ("Noticeable", float("inf")))

NOTES = (
    "P_attr, P_assoc, P_subgroup and SBLS are oriented so that 1 is the best protection.",
    "Classes absent from the labels are left out of the aligned mean AUC.",
    "Hard-prediction mode rescales excess balanced accuracy by (1 - 1/K).",
    "Vulnerability bands use AUC excess over 0.5: < 0.01 Minimal, < 0.05 Low, "
    "< 0.15 Moderate, otherwise Noticeable; the cut points are a fixed convention.",
)


def band_vulnerability(auc: float) -> str:
    excess = round(max(0.0, auc - 0.5), 12)
    for label, upper in BANDS:
        if excess < upper:
            return label
    return BANDS[-1][0]


def sbls_value(p_attr: float, p_assoc: float, p_subgroup: float,
               alpha: float = 0.4, beta: float = 0.4, gamma: float = 0.2) -> float:
    """alpha * p_attr + beta * p_assoc + gamma * p_subgroup, rounded once."""
    exact = (Fraction(alpha) * Fraction(p_attr) + Fraction(beta) * Fraction(p_assoc)
             + Fraction(gamma) * Fraction(p_subgroup))
    return float(exact)


@dataclass(frozen=True)
class AttributeDiagnostics:
    name: str
    k: int
    n: int
    alignment: AlignmentResult
    leakage: AttributeLeakage
    linkage: LinkageResult
    band: str | None
    excluded_no_label: int = 0
    excluded_no_score: int = 0

    def to_json(self) -> dict:
        return {
            "name": self.name, "k": self.k, "n": self.n,
            "excluded_no_label": self.excluded_no_label,
            "excluded_no_score": self.excluded_no_score,
            "band": self.band,
            "alignment": self.alignment.to_json(),
            "leakage": self.leakage.to_json(),
            "linkage": self.linkage.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AttributeDiagnostics":
        return cls(obj["name"], obj["k"], obj["n"], AlignmentResult.from_json(obj["alignment"]),
                   AttributeLeakage.from_json(obj["leakage"]),
                   LinkageResult.from_json(obj["linkage"]), obj["band"],
                   obj["excluded_no_label"], obj["excluded_no_score"])


@dataclass(frozen=True)
class SblsReport:
    """Scores for one system plus everything needed to trace them."""

    p_attr: float
    p_assoc: float
    p_subgroup: float
    sbls: float
    config: EvaluationConfig
    name: str = "system"
    attributes: tuple[AttributeDiagnostics, ...] = ()
    subgroups: tuple[SubgroupReport, ...] = ()
    grouping_fields: tuple[str, ...] = ()
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        for fname in ("p_attr", "p_assoc", "p_subgroup", "sbls"):
            v = getattr(self, fname)
            if not 0.0 <= v <= 1.0:
                raise SBLSError(f"{fname} = {v!r} is outside [0, 1]")
        c = self.config
        expected = c.alpha * self.p_attr + c.beta * self.p_assoc + c.gamma * self.p_subgroup
        if abs(expected - self.sbls) > 1e-12:
            raise SBLSError(f"sbls {self.sbls!r} does not match the weighted components")

    @property
    def worst_subgroup(self) -> SubgroupReport | None:
        return worst_subgroup(self.subgroups)

    def to_json(self) -> dict:
        worst = self.worst_subgroup
        return {
            "name": self.name,
            "p_attr": self.p_attr,
            "p_assoc": self.p_assoc,
            "p_subgroup": self.p_subgroup,
            "sbls": self.sbls,
            "config": self.config.to_json(),
            "inputs": self.inputs,
            "attributes": [a.to_json() for a in self.attributes],
            "subgroups": {
                "fields": list(self.grouping_fields),
                "min_size": self.config.min_subgroup_size,
                "worst": None if worst is None else key_str(worst.key),
                "cells": [s.to_json() for s in self.subgroups],
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SblsReport":
        sub = obj.get("subgroups", {})
        return cls(
            p_attr=obj["p_attr"], p_assoc=obj["p_assoc"], p_subgroup=obj["p_subgroup"],
            sbls=obj["sbls"], config=EvaluationConfig.from_json(obj["config"]),
            name=obj["name"],
            attributes=tuple(AttributeDiagnostics.from_json(a) for a in obj.get("attributes", [])),
            subgroups=tuple(SubgroupReport.from_json(s) for s in sub.get("cells", [])),
            grouping_fields=tuple(sub.get("fields", [])),
            inputs=obj.get("inputs", {}),
        )


def compose(p_attr: float, p_assoc: float, p_subgroup: float,
            config: EvaluationConfig | None = None, **details) -> SblsReport:
    """Weighted composite of the three components.

    ``details`` are passed through to :class:`SblsReport` (name, attributes,
    subgroups, grouping_fields, inputs).
    """
    config = config or EvaluationConfig()
    value = sbls_value(p_attr, p_assoc, p_subgroup, config.alpha, config.beta, config.gamma)
    return SblsReport(p_attr, p_assoc, p_subgroup, value, config, **details)


# -- serialization -----------------------------------------------------------

def to_document(reports: SblsReport | Sequence[SblsReport]) -> dict:
    if isinstance(reports, SblsReport):
        reports = [reports]
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "sbls", "version": __version__},
        "notes": list(NOTES),
        "systems": [r.to_json() for r in reports],
    }


def emit_report(reports: SblsReport | Sequence[SblsReport], fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(to_document(reports), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if fmt == "text":
        if isinstance(reports, SblsReport):
            reports = [reports]
        return render_text(reports)
    raise ValueError(f"unknown report format {fmt!r}")


def load_report(text: str) -> list[SblsReport]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SBLSError(f"report is not valid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise SBLSError("report must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"report schema version {version!r} is not supported "
                                 f"(this tool reads version {SCHEMA_VERSION})")
    try:
        return [SblsReport.from_json(s) for s in doc["systems"]]
    except (KeyError, TypeError) as exc:
        raise SBLSError(f"malformed report: missing or invalid field {exc}") from None


# -- text rendering ----------------------------------------------------------

def _f(x: float | None) -> str:
    return "-" if x is None else f"{x:.3f}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]

    def line(cells):
        return "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w)
                         for i, (c, w) in enumerate(zip(cells, widths))).rstrip()

    return [line(header), "  ".join("-" * w for w in widths), *(line(r) for r in rows)]


def render_text(reports: Sequence[SblsReport]) -> str:
    if not reports:
        return "no systems\n"
    cfg = reports[0].config
    out = [f"Soft Biometric Leakage Score (alpha={cfg.alpha:g}, beta={cfg.beta:g}, "
           f"gamma={cfg.gamma:g}, omega={cfg.omega:g})", ""]
    out += _table(["System", "P_attr", "P_assoc", "P_subgroup", "SBLS"],
                  [[r.name, _f(r.p_attr), _f(r.p_assoc), _f(r.p_subgroup), _f(r.sbls)]
                   for r in reports])

    names = [a.name for a in reports[0].attributes]
    if names:
        metric = "bacc" if cfg.score_mode == HARD else "AUC"
        out += ["", "Attribute inference", ""]
        rows = []
        for r in reports:
            by_name = {a.name: a for a in r.attributes}
            vals = [_f(by_name[n].alignment.aligned_mean) if n in by_name else "-" for n in names]
            bands = [(by_name[n].band or "n/a") if n in by_name else "-" for n in names]
            nmis = [_f(by_name[n].linkage.normalized_mi) if n in by_name else "-" for n in names]
            rows.append([r.name, *vals, *nmis, *bands])
        out += _table(["System", *(f"{n} {metric}" for n in names),
                       *(f"{n} NMI" for n in names), *(f"{n} Vulnerability" for n in names)],
                      rows)

    for r in reports:
        out += ["", f"Subgroups: {r.name} (fields: {', '.join(r.grouping_fields) or 'none'}; "
                    f"n ≥ {r.config.min_subgroup_size})", ""]
        included = [s for s in r.subgroups if s.included]
        if not included:
            out.append(f"no subgroups met n ≥ {r.config.min_subgroup_size}")
        else:
            attr_names = [a for a, _ in r.subgroups[0].per_attribute]
            rows = []
            for s in r.subgroups:
                per = dict(s.per_attribute)
                rows.append([key_str(s.key), str(s.n), _f(s.leakage),
                             *(_f(per.get(a)) for a in attr_names),
                             s.excluded_reason or ""])
            out += _table(["group", "n", "L_g", *attr_names, "note"], rows)
    out += ["", *("note: " + n for n in NOTES)]
    return "\n".join(out) + "\n"
