"""Evaluation inputs: attribute schema, score/label tables and run config.

On-disk formats
---------------
schema   JSON ``{"attributes": [{"name": str, "classes": [str, ...]}, ...]}``
scores   CSV ``segment_id,<class_1>,...,<class_K>``, one file per attribute.
         A file with header ``segment_id,prediction`` holds hard class
         predictions instead; each is encoded as a one-hot score row.
labels   CSV ``segment_id,<attr_1>,...[,extra metadata columns]``. Empty
         cells mean "unknown" and drop the row for that attribute only.

CSV files may carry a UTF-8 BOM and use LF or CRLF line endings.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateAttribute,
    DuplicateAttribute,
    DuplicateClass,
    DuplicateSegment,
    NoJoinedRows,
    NonFiniteScore,
    ParseError,
    SBLSError,
    UnknownAttribute,
    UnknownClass,
    WeightSumViolation,
    WidthMismatch,
)

SEGMENT_ID = "segment_id"
PREDICTION = "prediction"
SCORE_MODES = ("soft_scores", "hard_predictions")


@dataclass(frozen=True)
class Attribute:
    name: str
    classes: tuple[str, ...]

    @property
    def k(self) -> int:
        return len(self.classes)

    def index(self, cls: str) -> int:
        return self.classes.index(cls)


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attribute set; class order within each attribute is kept."""

    attributes: tuple[Attribute, ...]

    def __post_init__(self):
        seen = set()
        for attr in self.attributes:
            if attr.name in seen:
                raise DuplicateAttribute(f"duplicate attribute {attr.name!r}")
            seen.add(attr.name)
            if len(set(attr.classes)) != len(attr.classes):
                dup = next(c for c in attr.classes if attr.classes.count(c) > 1)
                raise DuplicateClass(f"duplicate class {dup!r} in attribute {attr.name!r}")
            if attr.k < 2:
                raise DegenerateAttribute(
                    f"attribute {attr.name!r} has {attr.k} class(es); at least 2 required"
                )

    @classmethod
    def from_dict(cls, mapping: Mapping[str, Sequence[str]]) -> "AttributeSchema":
        return cls(tuple(Attribute(str(n), tuple(map(str, c))) for n, c in mapping.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    @property
    def cardinalities(self) -> dict[str, int]:
        return {a.name: a.k for a in self.attributes}

    def __getitem__(self, name: str) -> Attribute:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        raise UnknownAttribute(f"attribute {name!r} not in schema")

    def __contains__(self, name: object) -> bool:
        return any(a.name == name for a in self.attributes)

    def to_json(self) -> dict:
        return {"attributes": [{"name": a.name, "classes": list(a.classes)} for a in self.attributes]}


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """Attacker scores for one attribute; ``scores[i]`` belongs to ``segment_ids[i]``.

    Columns follow the schema class order when the file header names the
    schema classes, otherwise the file's own column order.
    """

    attribute: str
    segment_ids: tuple[str, ...]
    scores: np.ndarray
    columns: tuple[str, ...]
    source: str | None = None

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64, copy=True)
        if scores.ndim != 2 or scores.shape[0] != len(self.segment_ids):
            raise WidthMismatch(f"score matrix shape {scores.shape} does not match "
                                f"{len(self.segment_ids)} segment ids")
        if not np.isfinite(scores).all():
            raise NonFiniteScore(f"non-finite score in table for {self.attribute!r}")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    @property
    def n(self) -> int:
        return len(self.segment_ids)

    @property
    def k(self) -> int:
        return self.scores.shape[1]

    def rows(self) -> dict[str, np.ndarray]:
        return dict(zip(self.segment_ids, self.scores))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScoreTable):
            return NotImplemented
        return (self.attribute == other.attribute and self.segment_ids == other.segment_ids
                and self.columns == other.columns and np.array_equal(self.scores, other.scores))


@dataclass(frozen=True)
class LabelTable:
    """Ground truth per segment: one column per field, ``None`` for missing."""

    segment_ids: tuple[str, ...]
    fields: tuple[str, ...]
    values: Mapping[str, tuple[str | None, ...]]
    source: str | None = None

    def __post_init__(self):
        if len(set(self.segment_ids)) != len(self.segment_ids):
            raise DuplicateSegment("segment ids in label table are not unique")
        frozen = {f: tuple(self.values[f]) for f in self.fields}
        for f, col in frozen.items():
            if len(col) != len(self.segment_ids):
                raise ParseError(f"label column {f!r} has wrong length")
        object.__setattr__(self, "values", frozen)

    @property
    def n(self) -> int:
        return len(self.segment_ids)

    def column(self, name: str) -> tuple[str | None, ...]:
        try:
            return self.values[name]
        except KeyError:
            raise UnknownAttribute(f"label table has no column {name!r}") from None

    def subset(self, indices: Iterable[int]) -> "LabelTable":
        idx = list(indices)
        return LabelTable(
            tuple(self.segment_ids[i] for i in idx),
            self.fields,
            {f: tuple(self.values[f][i] for i in idx) for f in self.fields},
            self.source,
        )


@dataclass(frozen=True)
class EvaluationConfig:
    alpha: float = 0.4
    beta: float = 0.4
    gamma: float = 0.2
    omega: float = 0.7
    min_subgroup_size: int = 10
    score_mode: str = "soft_scores"

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "omega"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1], got {v!r}")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise WeightSumViolation(
                f"alpha + beta + gamma must equal 1, got {self.alpha + self.beta + self.gamma!r}"
            )
        if isinstance(self.min_subgroup_size, bool) or not isinstance(self.min_subgroup_size, int) \
                or self.min_subgroup_size < 1:
            raise ConfigError(f"min_subgroup_size must be a positive integer, "
                              f"got {self.min_subgroup_size!r}")
        if self.score_mode not in SCORE_MODES:
            raise ConfigError(f"score_mode must be one of {SCORE_MODES}, got {self.score_mode!r}")

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
            "omega": self.omega, "min_subgroup_size": self.min_subgroup_size,
            "score_mode": self.score_mode,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "EvaluationConfig":
        known = {"alpha", "beta", "gamma", "omega", "min_subgroup_size", "score_mode"}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)


@dataclass(frozen=True, eq=False)
class JoinedAttribute:
    """Scores and integer class labels for the rows present on both sides."""

    attribute: Attribute
    segment_ids: tuple[str, ...]
    scores: np.ndarray
    labels: np.ndarray
    excluded_no_label: int = 0
    excluded_no_score: int = 0
    label_rows: np.ndarray = field(default=None, repr=False)  # row index into LabelTable

    @property
    def n(self) -> int:
        return len(self.segment_ids)

    @property
    def k(self) -> int:
        return self.attribute.k


# -- parsing -----------------------------------------------------------------

def _loc(path, line: int | None = None) -> str:
    return f"{path}:{line}" if line is not None else str(path)


def _report(exc: SBLSError, findings: list | None):
    if findings is None:
        raise exc
    findings.append(exc)


def load_schema(path: str | os.PathLike) -> AttributeSchema:
    """Read and validate a schema JSON file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise ParseError(f"cannot read schema: {exc.strerror}", _loc(path)) from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", _loc(path, exc.lineno)) from None
    return parse_schema(obj, source=str(path))


def parse_schema(obj, source: str = "<schema>") -> AttributeSchema:
    if not isinstance(obj, dict) or not isinstance(obj.get("attributes"), list):
        raise ParseError('schema must be an object with an "attributes" list', source)
    attrs = []
    for i, entry in enumerate(obj["attributes"]):
        where = f"{source}: attributes[{i}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str) \
                or not isinstance(entry.get("classes"), list) \
                or not all(isinstance(c, str) for c in entry["classes"]):
            raise ParseError('each attribute needs a string "name" and a list of string "classes"',
                             where)
        attrs.append(Attribute(entry["name"], tuple(entry["classes"])))
    try:
        return AttributeSchema(tuple(attrs))
    except SBLSError as exc:
        raise type(exc)(exc.message, source) from None


def _open_csv(path: Path):
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", _loc(path)) from None
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8: {exc.reason}", _loc(path)) from None
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", _loc(path)) from None
    except csv.Error as exc:
        raise ParseError(str(exc), _loc(path, 1)) from None
    return reader, [h.strip() for h in header]


def _parse_float(cell: str, where: str) -> float:
    cell = cell.strip()
    if "_" in cell:
        raise ParseError(f"invalid number {cell!r}", where)
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"invalid number {cell!r}", where) from None
    if not math.isfinite(value):
        raise NonFiniteScore(f"non-finite score {cell!r}", where)
    return value


def _infer_attribute(path: Path, header: list[str], schema: AttributeSchema) -> str:
    if path.stem in schema:
        return path.stem
    cols = set(header[1:])
    hits = [a.name for a in schema.attributes if set(a.classes) == cols]
    if len(hits) == 1:
        return hits[0]
    raise ParseError("cannot tell which attribute this score file belongs to; "
                     "name it <attribute>.csv or pass ATTRIBUTE=PATH", _loc(path))


def load_score_table(path: str | os.PathLike, schema: AttributeSchema,
                     attribute: str | None = None,
                     findings: list | None = None) -> ScoreTable:
    """Parse one score (or hard-prediction) file.

    With ``findings`` given, row-level problems are appended there and the
    offending rows skipped; otherwise the first problem is raised.
    """
    path = Path(path)
    reader, header = _open_csv(path)
    if not header or header[0] != SEGMENT_ID:
        raise ParseError(f"first column must be {SEGMENT_ID!r}", _loc(path, 1))
    name = attribute if attribute is not None else _infer_attribute(path, header, schema)
    attr = schema[name]
    hard = header[1:] == [PREDICTION]

    if hard:
        columns = attr.classes
        order = None
    else:
        columns = tuple(header[1:])
        if len(columns) != attr.k:
            raise WidthMismatch(f"header has {len(columns)} score columns, attribute {name!r} "
                                f"has {attr.k} classes", _loc(path, 1))
        if set(columns) == set(attr.classes) and len(set(columns)) == attr.k:
            order = [columns.index(c) for c in attr.classes]
            columns = attr.classes
        else:
            order = None

    ids: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    width = 2 if hard else attr.k + 1
    try:
        for fields in reader:
            line = reader.line_num
            where = _loc(path, line)
            if not fields or all(not f.strip() for f in fields):
                continue
            if len(fields) != width:
                _report(WidthMismatch(f"row has {len(fields) - 1} value(s), expected {width - 1}",
                                      where), findings)
                continue
            seg = fields[0].strip()
            if seg in seen:
                _report(DuplicateSegment(f"duplicate segment id {seg!r}", where), findings)
                continue
            try:
                if hard:
                    cls = fields[1].strip()
                    if cls not in attr.classes:
                        raise UnknownClass(f"unknown class {cls!r} for attribute {name!r}", where)
                    vec = [0.0] * attr.k
                    vec[attr.index(cls)] = 1.0
                else:
                    vec = [_parse_float(c, where) for c in fields[1:]]
                    if order is not None:
                        vec = [vec[j] for j in order]
            except SBLSError as exc:
                _report(exc, findings)
                continue
            seen.add(seg)
            ids.append(seg)
            rows.append(vec)
    except csv.Error as exc:
        raise ParseError(str(exc), _loc(path, reader.line_num)) from None

    scores = np.asarray(rows, dtype=np.float64).reshape(len(rows), attr.k)
    return ScoreTable(name, tuple(ids), scores, tuple(columns), str(path))


def load_label_table(path: str | os.PathLike, schema: AttributeSchema,
                     findings: list | None = None) -> LabelTable:
    path = Path(path)
    reader, header = _open_csv(path)
    if not header or header[0] != SEGMENT_ID:
        raise ParseError(f"first column must be {SEGMENT_ID!r}", _loc(path, 1))
    fields_ = header[1:]
    if len(set(fields_)) != len(fields_):
        raise ParseError("duplicate column names in label header", _loc(path, 1))
    ids: list[str] = []
    cols: dict[str, list] = {f: [] for f in fields_}
    seen: set[str] = set()
    try:
        for row in reader:
            line = reader.line_num
            where = _loc(path, line)
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                _report(WidthMismatch(f"row has {len(row)} cells, header has {len(header)}", where),
                        findings)
                continue
            seg = row[0].strip()
            if seg in seen:
                _report(DuplicateSegment(f"duplicate segment id {seg!r}", where), findings)
                continue
            values = []
            bad = False
            for f, cell in zip(fields_, row[1:]):
                cell = cell.strip()
                if cell == "":
                    values.append(None)
                    continue
                if f in schema and cell not in schema[f].classes:
                    _report(UnknownClass(f"unknown class {cell!r} for attribute {f!r}", where),
                            findings)
                    bad = True
                    break
                values.append(cell)
            if bad:
                continue
            seen.add(seg)
            ids.append(seg)
            for f, v in zip(fields_, values):
                cols[f].append(v)
    except csv.Error as exc:
        raise ParseError(str(exc), _loc(path, reader.line_num)) from None
    return LabelTable(tuple(ids), tuple(fields_), {f: tuple(v) for f, v in cols.items()}, str(path))


def split_score_arg(item) -> tuple[str | None, Path]:
    if isinstance(item, tuple):
        return item[0], Path(item[1])
    s = os.fspath(item)
    if "=" in s and not Path(s).exists():
        name, _, p = s.partition("=")
        return name, Path(p)
    return None, Path(s)


def load_tables(score_paths: Sequence, label_path: str | os.PathLike,
                schema: AttributeSchema) -> tuple[list[ScoreTable], LabelTable]:
    """Load score files and the label file, and check that every attribute joins.

    ``score_paths`` items are paths (attribute taken from the file stem or
    the header classes), ``"attr=path"`` strings, or ``(attr, path)`` pairs.
    Tables come back in schema order.
    """
    labels = load_label_table(label_path, schema)
    tables = []
    for item in score_paths:
        name, path = split_score_arg(item)
        tables.append(load_score_table(path, schema, attribute=name))
    names = [t.attribute for t in tables]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise DuplicateAttribute(f"more than one score file for attribute(s) {sorted(dup)}")
    tables.sort(key=lambda t: schema.names.index(t.attribute))
    for t in tables:
        join(t, labels, schema)  # raises NoJoinedRows
    return tables, labels


def join(table: ScoreTable, labels: LabelTable, schema: AttributeSchema) -> JoinedAttribute:
    """Exact-match join on segment id, in label-table row order.

    Rows whose label is missing for this attribute are dropped here only.
    """
    attr = schema[table.attribute]
    if attr.name not in labels.fields:
        raise NoJoinedRows(f"label table has no column for attribute {attr.name!r}",
                           labels.source)
    col = labels.column(attr.name)
    pos = {s: i for i, s in enumerate(table.segment_ids)}
    label_index = {c: i for i, c in enumerate(attr.classes)}
    rows, score_rows, ys = [], [], []
    no_label = 0
    matched = 0
    for i, (seg, value) in enumerate(zip(labels.segment_ids, col)):
        j = pos.get(seg)
        if j is None:
            continue
        matched += 1
        if value is None:
            no_label += 1
            continue
        rows.append(i)
        score_rows.append(j)
        ys.append(label_index[value])
    if not rows:
        raise NoJoinedRows(f"no rows join between scores and labels for attribute {attr.name!r}",
                           table.source)
    excluded_no_label = (table.n - matched) + no_label
    excluded_no_score = sum(1 for v in col if v is not None) - (matched - no_label)
    scores = table.scores[np.asarray(score_rows, dtype=np.intp)]
    labels_arr = np.asarray(ys, dtype=np.intp)
    label_rows = np.asarray(rows, dtype=np.intp)
    for a in (labels_arr, label_rows):
        a.setflags(write=False)
    return JoinedAttribute(attr, tuple(labels.segment_ids[i] for i in rows), scores, labels_arr,
                           excluded_no_label, excluded_no_score, label_rows)


# -- writing -----------------------------------------------------------------

def write_schema(schema: AttributeSchema, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(schema.to_json(), indent=2) + "\n", encoding="utf-8")


def format_score(x: float) -> str:
    return repr(float(x))


def write_score_table(table: ScoreTable, path: str | os.PathLike, fmt=format_score) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([SEGMENT_ID, *table.columns])
        for seg, row in zip(table.segment_ids, table.scores):
            w.writerow([seg, *(fmt(x) for x in row)])


def write_label_table(labels: LabelTable, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([SEGMENT_ID, *labels.fields])
        for i, seg in enumerate(labels.segment_ids):
            w.writerow([seg, *(labels.values[f][i] or "" for f in labels.fields)])
