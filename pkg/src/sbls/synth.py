"""Synthetic score/label datasets with a known attacker strength.

Used as the independent check on every metric and as demo data.

Randomness comes from the PCG64 bit generator (its raw 64-bit stream is
fixed by the algorithm). Uniforms and normals are derived from the raw
words with IEEE basic arithmetic only (no libm calls), so a given seed
produces byte-identical files on every platform.

Draw order for a spec: labels of each attribute in declaration order
(N - 1 uniforms each, Fisher-Yates), then scores of each attribute in
declaration order.

Spec file (JSON)::

    {
      "seed": 7,
      "n_rows": 3000,
      "attributes": [
        {"name": "sex", "classes": ["male", "female"], "priors": [0.5, 0.5],
         "linkage": "binormal", "target_auc": 0.7},
        {"name": "age", "k": 3, "linkage": "noisy", "p_correct": 0.5},
        {"name": "dialect", "k": 2, "linkage": "bijective", "permutation": [1, 0]},
        {"name": "style", "k": 2, "linkage": "independent"}
      ],
      "subgroup_skews": [
        {"when": {"age": "c0"}, "attribute": "sex", "target_auc": 0.9}
      ]
    }

Linkage kinds: ``independent`` (scores ignore labels), ``binormal``
(true-class column shifted so the expected one-vs-rest AUC is
``target_auc``), ``bijective`` (one-hot on a fixed column permutation),
``noisy`` (one-hot on the true class with probability ``p_correct``, else
uniformly on a wrong class).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import (
    Attribute,
    AttributeSchema,
    LabelTable,
    ScoreTable,
    write_label_table,
    write_schema,
    write_score_table,
)
from .errors import SBLSError, SynthSpecError

LINKAGES = ("independent", "binormal", "bijective", "noisy")

_LN2 = 0.6931471805599453
_SQRT_HALF = 0.7071067811865476


# -- deterministic numerics --------------------------------------------------

def det_log(x: np.ndarray) -> np.ndarray:
    """Natural log from frexp and an atanh series: reproducible bit for bit."""
    x = np.asarray(x, dtype=np.float64)
    m, e = np.frexp(x)
    low = m < _SQRT_HALF
    m = np.where(low, m * 2.0, m)
    e = np.where(low, e - 1, e).astype(np.float64)
    s = (m - 1.0) / (m + 1.0)
    s2 = s * s
    t = np.full_like(s, 1.0 / 29.0)
    for i in range(13, -1, -1):
        t = t * s2 + 1.0 / (2 * i + 1)
    return 2.0 * s * t + e * _LN2


_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, x):
    acc = np.full_like(x, coef[-1])
    for c in coef[-2::-1]:
        acc = acc * x + c
    return acc


def norm_ppf(p) -> np.ndarray:
    """Standard normal quantile for p in (0, 1), Wichura's AS 241."""
    p = np.asarray(p, dtype=np.float64)
    q = p - 0.5
    central = np.abs(q) <= 0.425
    r = 0.180625 - q * q
    x_central = q * _poly(_A, r) / _poly(_B, r)
    tail = np.where(q < 0.0, p, 1.0 - p)
    tail = np.where(central, 0.5, tail)  # keep the log finite on unused lanes
    rt = np.sqrt(-det_log(tail))
    near = rt <= 5.0
    r1 = rt - 1.6
    r2 = rt - 5.0
    x_tail = np.where(near, _poly(_C, r1) / _poly(_D, r1), _poly(_E, r2) / _poly(_F, r2))
    x_tail = np.where(q < 0.0, -x_tail, x_tail)
    return np.where(central, x_central, x_tail)


class Stream:
    """Sequential uniforms/normals from one PCG64 stream."""

    def __init__(self, seed: int):
        self._bits = np.random.PCG64(seed)

    def uniform(self, n: int) -> np.ndarray:
        raw = self._bits.random_raw(n) if n else np.empty(0, dtype=np.uint64)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)

    def normal(self, n: int) -> np.ndarray:
        return norm_ppf(self.uniform(n))


# -- spec --------------------------------------------------------------------

@dataclass(frozen=True)
class SynthAttribute:
    name: str
    classes: tuple[str, ...]
    priors: tuple[float, ...]
    linkage: str = "independent"
    target_auc: float = 0.5
    p_correct: float | None = None
    permutation: tuple[int, ...] | None = None

    @property
    def k(self) -> int:
        return len(self.classes)

    @property
    def column_of(self) -> tuple[int, ...]:
        return self.permutation if self.permutation is not None else tuple(range(self.k))


@dataclass(frozen=True)
class SubgroupSkew:
    when: tuple[tuple[str, str], ...]
    attribute: str
    target_auc: float | None = None
    p_correct: float | None = None


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    n_rows: int
    attributes: tuple[SynthAttribute, ...]
    subgroup_skews: tuple[SubgroupSkew, ...] = ()

    def __post_init__(self):
        _validate(self)

    @property
    def schema(self) -> AttributeSchema:
        return AttributeSchema(tuple(Attribute(a.name, a.classes) for a in self.attributes))

    def with_seed(self, seed: int) -> "SynthSpec":
        return SynthSpec(seed, self.n_rows, self.attributes, self.subgroup_skews)

    @classmethod
    def from_json(cls, obj) -> "SynthSpec":
        if not isinstance(obj, dict):
            raise SynthSpecError("synth spec must be a JSON object")
        unknown = set(obj) - {"seed", "n_rows", "attributes", "subgroup_skews"}
        if unknown:
            raise SynthSpecError(f"unknown spec keys: {sorted(unknown)}")
        try:
            attrs = tuple(_parse_attribute(a, i) for i, a in enumerate(obj["attributes"]))
            skews = tuple(
                SubgroupSkew(tuple(dict(s["when"]).items()), s["attribute"],
                             s.get("target_auc"), s.get("p_correct"))
                for s in obj.get("subgroup_skews", [])
            )
            return cls(obj["seed"], obj["n_rows"], attrs, skews)
        except (KeyError, TypeError) as exc:
            raise SynthSpecError(f"malformed synth spec: {exc!r}") from None

    def to_json(self) -> dict:
        attrs = []
        for a in self.attributes:
            d = {"name": a.name, "classes": list(a.classes), "priors": list(a.priors),
                 "linkage": a.linkage}
            if a.linkage == "binormal":
                d["target_auc"] = a.target_auc
            if a.linkage == "noisy":
                d["p_correct"] = a.p_correct
            if a.permutation is not None:
                d["permutation"] = list(a.permutation)
            attrs.append(d)
        skews = []
        for s in self.subgroup_skews:
            d = {"when": dict(s.when), "attribute": s.attribute}
            if s.target_auc is not None:
                d["target_auc"] = s.target_auc
            if s.p_correct is not None:
                d["p_correct"] = s.p_correct
            skews.append(d)
        return {"seed": self.seed, "n_rows": self.n_rows, "attributes": attrs,
                "subgroup_skews": skews}


def _parse_attribute(obj: Mapping, i: int) -> SynthAttribute:
    where = f"attributes[{i}]"
    if not isinstance(obj, dict):
        raise SynthSpecError(f"{where} must be an object")
    unknown = set(obj) - {"name", "classes", "k", "priors", "linkage", "target_auc",
                          "p_correct", "permutation"}
    if unknown:
        raise SynthSpecError(f"{where}: unknown keys {sorted(unknown)}")
    if "classes" in obj:
        classes = tuple(str(c) for c in obj["classes"])
    elif "k" in obj:
        classes = tuple(f"c{j}" for j in range(int(obj["k"])))
    else:
        raise SynthSpecError(f"{where}: give either 'classes' or 'k'")
    k = len(classes)
    priors = tuple(float(p) for p in obj.get("priors", [1.0 / k] * k)) if k else ()
    perm = obj.get("permutation")
    return SynthAttribute(
        name=str(obj["name"]),
        classes=classes,
        priors=priors,
        linkage=obj.get("linkage", "independent"),
        target_auc=float(obj.get("target_auc", 0.5)),
        p_correct=None if obj.get("p_correct") is None else float(obj["p_correct"]),
        permutation=None if perm is None else tuple(int(x) for x in perm),
    )


def _validate(spec: SynthSpec) -> None:
    if isinstance(spec.seed, bool) or not isinstance(spec.seed, int) or not 0 <= spec.seed < 2**64:
        raise SynthSpecError(f"seed must be an integer in [0, 2^64), got {spec.seed!r}")
    if isinstance(spec.n_rows, bool) or not isinstance(spec.n_rows, int) or spec.n_rows < 2:
        raise SynthSpecError(f"n_rows must be an integer >= 2, got {spec.n_rows!r}")
    if not spec.attributes:
        raise SynthSpecError("at least one attribute is required")
    try:
        spec.schema
    except SBLSError as exc:
        raise SynthSpecError(exc.message) from None
    for a in spec.attributes:
        where = f"attribute {a.name!r}"
        if a.name in ("labels", "schema") or not a.name or "/" in a.name or "\\" in a.name:
            raise SynthSpecError(f"{where}: name cannot be used as an output file name")
        if len(a.priors) != a.k:
            raise SynthSpecError(f"{where}: {len(a.priors)} priors for {a.k} classes")
        if any(not math.isfinite(p) or p < 0 for p in a.priors) or abs(sum(a.priors) - 1) > 1e-9:
            raise SynthSpecError(f"{where}: priors must be non-negative and sum to 1")
        if a.linkage not in LINKAGES:
            raise SynthSpecError(f"{where}: linkage must be one of {LINKAGES}")
        if a.linkage == "binormal" and not 0.5 <= a.target_auc < 1.0:
            raise SynthSpecError(f"{where}: target_auc must be in [0.5, 1)")
        if a.linkage == "noisy":
            if a.p_correct is None or not 1.0 / a.k <= a.p_correct <= 1.0:
                raise SynthSpecError(f"{where}: p_correct must be in [1/K, 1]")
        if a.permutation is not None and sorted(a.permutation) != list(range(a.k)):
            raise SynthSpecError(f"{where}: permutation must be a bijection on 0..{a.k - 1}")
    by_name = {a.name: a for a in spec.attributes}
    for s in spec.subgroup_skews:
        target = by_name.get(s.attribute)
        if target is None:
            raise SynthSpecError(f"skew refers to unknown attribute {s.attribute!r}")
        for f, v in s.when:
            if f not in by_name or v not in by_name[f].classes:
                raise SynthSpecError(f"skew condition {f}={v} does not name a class")
        if target.linkage == "binormal":
            if s.target_auc is None or not 0.5 <= s.target_auc < 1.0:
                raise SynthSpecError("binormal skew needs target_auc in [0.5, 1)")
        elif target.linkage == "noisy":
            if s.p_correct is None or not 1.0 / target.k <= s.p_correct <= 1.0:
                raise SynthSpecError("noisy skew needs p_correct in [1/K, 1]")
        else:
            raise SynthSpecError(f"skews only apply to binormal or noisy attributes, "
                                 f"{s.attribute!r} is {target.linkage}")


def load_spec(path: str | os.PathLike) -> SynthSpec:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8-sig"))
    except OSError as exc:
        raise SynthSpecError(f"cannot read spec {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SynthSpecError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    return SynthSpec.from_json(obj)


# -- generation --------------------------------------------------------------

def class_counts(priors: Sequence[float], n: int) -> list[int]:
    """Largest-remainder apportionment of n rows; ties go to the lower class."""
    quotas = [p * n for p in priors]
    counts = [int(math.floor(q)) for q in quotas]
    order = sorted(range(len(priors)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def _shuffled_labels(counts: Sequence[int], stream: Stream) -> np.ndarray:
    labels = np.repeat(np.arange(len(counts), dtype=np.intp), counts)
    n = labels.size
    u = stream.uniform(n - 1)
    for t, i in enumerate(range(n - 1, 0, -1)):
        j = int(u[t] * (i + 1))
        labels[i], labels[j] = labels[j], labels[i]
    return labels


def binormal_shift(target_auc) -> np.ndarray:
    """Mean shift d with Phi(d / sqrt 2) = target_auc."""
    return np.sqrt(2.0) * norm_ppf(np.asarray(target_auc, dtype=np.float64))


def _skew_mask(skew: SubgroupSkew, spec: SynthSpec, labels: dict[str, np.ndarray]) -> np.ndarray:
    mask = np.ones(spec.n_rows, dtype=bool)
    by_name = {a.name: a for a in spec.attributes}
    for f, v in skew.when:
        mask &= labels[f] == by_name[f].classes.index(v)
    return mask


def synthesize(spec: SynthSpec) -> tuple[AttributeSchema, list[ScoreTable], LabelTable]:
    """In-memory dataset for ``spec``; :func:`generate` writes the same data to disk."""
    n = spec.n_rows
    stream = Stream(spec.seed)
    labels = {a.name: _shuffled_labels(class_counts(a.priors, n), stream) for a in spec.attributes}
    width = max(6, len(str(n - 1)))
    ids = tuple(f"seg{i:0{width}d}" for i in range(n))
    rows = np.arange(n)

    tables = []
    for a in spec.attributes:
        y = labels[a.name]
        col = np.asarray(a.column_of, dtype=np.intp)
        skews = [s for s in spec.subgroup_skews if s.attribute == a.name]
        if a.linkage == "independent":
            scores = stream.normal(n * a.k).reshape(n, a.k)
        elif a.linkage == "binormal":
            auc = np.full(n, a.target_auc)
            for s in skews:
                auc[_skew_mask(s, spec, labels)] = s.target_auc
            scores = stream.normal(n * a.k).reshape(n, a.k)
            scores[rows, col[y]] += binormal_shift(auc)
        elif a.linkage == "bijective":
            scores = np.zeros((n, a.k))
            scores[rows, col[y]] = 1.0
        else:  # noisy
            p = np.full(n, a.p_correct)
            for s in skews:
                p[_skew_mask(s, spec, labels)] = s.p_correct
            keep = stream.uniform(n) < p
            wrong = np.minimum((stream.uniform(n) * (a.k - 1)).astype(np.intp), a.k - 2)
            wrong = np.where(wrong >= y, wrong + 1, wrong)
            pred = np.where(keep, y, wrong)
            scores = np.zeros((n, a.k))
            scores[rows, col[pred]] = 1.0
        tables.append(ScoreTable(a.name, ids, scores, a.classes))

    label_table = LabelTable(
        ids, tuple(a.name for a in spec.attributes),
        {a.name: tuple(a.classes[c] for c in labels[a.name]) for a in spec.attributes},
    )
    return spec.schema, tables, label_table


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def generate(spec: SynthSpec, out_dir: str | os.PathLike) -> list[tuple[str, str]]:
    """Write ``schema.json``, ``labels.csv`` and ``<attribute>.csv`` files.

    Returns ``(file name, sha256)`` pairs in write order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema, tables, labels = synthesize(spec)
    paths = [out / "schema.json", out / "labels.csv"]
    write_schema(schema, paths[0])
    write_label_table(labels, paths[1])
    for t in tables:
        p = out / f"{t.attribute}.csv"
        write_score_table(t, p)
        paths.append(p)
    return [(p.name, _sha256(p)) for p in paths]
