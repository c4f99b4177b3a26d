"""End-to-end acceptance checks, one marker per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import spec_dict
from oracles import entropy_identity_mi, exhaustive_alignment, pairwise_auc, pairwise_auc_matrix
from sbls.attribute import SOFT, AttributeLeakage, attribute_excess, auc_excess, p_attr
from sbls.auc import align_permutation, ovr_auc
from sbls.data import EvaluationConfig, LabelTable, ScoreTable
from sbls.linkage import (
    ConfusionMatrix,
    confusion_matrix,
    hard_predictions,
    mutual_information,
    p_assoc,
)
from sbls.pipeline import evaluate
from sbls.report import compose, sbls_value
from sbls.subgroup import SubgroupReport, p_subgroup
from sbls.synth import SynthSpec, generate, synthesize

criterion = pytest.mark.criterion

# name: (P_attr, P_assoc, P_subgroup, SBLS)
REFERENCE_COMPONENTS = {
    "PHORTRESS": (0.994, 0.998, 0.531, 0.903),
    "SHADOW": (0.936, 1.000, 0.501, 0.874),
    "kNN-VC": (0.877, 0.993, 0.604, 0.869),
    "RASP": (0.910, 0.995, 0.435, 0.849),
    "VOXLET": (0.690, 0.950, 0.332, 0.723),
}

# name: (M/F AUC, age AUC)
REFERENCE_AUCS = {
    "PHORTRESS": (0.501, 0.505),
    "RASP": (0.513, 0.577),
    "SHADOW": (0.538, 0.526),
    "kNN-VC": (0.543, 0.580),
    "VOXLET": (0.721, 0.589),
}


@criterion(1, "reference component triples recompose to reference SBLS within 0.001, < 1 s")
def test_recompose_reference_scores():
    t0 = time.perf_counter()
    for name, (pa, pb, pc, expected) in REFERENCE_COMPONENTS.items():
        r = compose(pa, pb, pc, EvaluationConfig(), name=name)
        assert abs(r.sbls - expected) <= 0.001 + 1e-12, name
    assert time.perf_counter() - t0 < 1.0


@criterion(2, "P_attr recomputed from reference AUC pairs within 0.005")
def test_p_attr_from_reference_aucs():
    for name, aucs in REFERENCE_AUCS.items():
        leaks = [AttributeLeakage(a, v, auc_excess(v), SOFT) for a, v in zip(("mf", "age"), aucs)]
        assert abs(p_attr(leaks) - REFERENCE_COMPONENTS[name][0]) <= 0.005 + 1e-12, name


@criterion(3, "matching-based alignment equals exhaustive enumeration on 200 tables")
def test_alignment_oracle_200_tables():
    rng = np.random.default_rng(20251016)
    checked = 0
    while checked < 200:
        k = int(rng.integers(2, 7))
        n = int(rng.integers(20, 201))
        labels = rng.integers(0, k, size=n)
        if np.unique(labels).size < 2:
            continue
        # coarse grid so ties between columns and permutations occur
        scores = rng.integers(0, 6, size=(n, k)) / 5.0
        r = align_permutation(scores, labels, k)
        w = pairwise_auc_matrix(scores, labels, k)
        present = np.bincount(labels, minlength=k) > 0
        perm, mean = exhaustive_alignment(w, present)
        assert r.permutation == perm
        assert r.m_auc_star == mean
        checked += 1


@criterion(4, "midrank AUC equals pairwise counting on 500 tied columns")
def test_auc_oracle_500_columns():
    rng = np.random.default_rng(4)
    for _ in range(500):
        n = int(rng.integers(2, 120))
        scores = rng.normal(size=n)
        dup = rng.random(n) < 0.4
        scores[dup] = rng.choice(scores, size=int(dup.sum()))
        scores = np.round(scores, int(rng.integers(0, 3)))
        mask = rng.random(n) < rng.uniform(0.1, 0.9)
        if mask.all() or not mask.any():
            mask[0] = not mask[0]
        assert ovr_auc(scores, mask) == pairwise_auc(scores, mask)


@criterion(5, "plug-in MI matches the entropy identity; bijective NMI 1, independent NMI 0")
def test_mi_oracle():
    rng = np.random.default_rng(5)
    for _ in range(200):
        k = int(rng.integers(2, 7))
        counts = rng.integers(0, 25, size=(k, k))
        counts[rng.random((k, k)) < 0.2] = 0
        counts[0, 0] += 1
        r = mutual_information(ConfusionMatrix("a", counts))
        assert abs(r.mutual_information - entropy_identity_mi(counts)) <= 1e-12
    for k in range(2, 7):
        perm = rng.permutation(k)
        bij = np.zeros((k, k), dtype=int)
        bij[np.arange(k), perm] = int(rng.integers(1, 50))
        assert mutual_information(ConfusionMatrix("a", bij)).normalized_mi == 1.0
        outer = np.outer(rng.integers(1, 9, size=k), rng.integers(1, 9, size=k))
        assert mutual_information(ConfusionMatrix("a", outer)).normalized_mi == 0.0


def _evaluate_spec(d, **kw):
    schema, tables, labels = synthesize(SynthSpec.from_json(d))
    return evaluate(schema, tables, labels, EvaluationConfig(**kw))


@criterion(6, "perfect attacker gives P_attr 0; independent attacker stays near 1 over 20 seeds")
def test_endpoints():
    # 2004 rows split evenly across both K, so the bijective NMI is exactly 1 too
    perfect = {"seed": 1, "n_rows": 2004, "attributes": [
        {"name": "sex", "k": 2, "linkage": "bijective"},
        {"name": "age", "k": 3, "linkage": "bijective", "permutation": [1, 2, 0]}]}
    r = _evaluate_spec(perfect)
    assert r.p_attr == 0.0
    assert r.p_assoc == 0.0
    for seed in range(20):
        d = {"seed": 1000 + seed, "n_rows": 10_000, "attributes": [
            {"name": "sex", "k": 2, "linkage": "independent"}]}
        _, tables, labels = synthesize(SynthSpec.from_json(d))
        y = np.array([int(v[1:]) for v in labels.column("sex")])
        al = align_permutation(tables[0].scores, y)
        pa = p_attr([attribute_excess(al)])
        pb = p_assoc([mutual_information(confusion_matrix(y, hard_predictions(tables[0].scores,
                                                                              al), 2))])
        assert 0.95 <= pa <= 1.0, seed
        assert 0.98 <= pb <= 1.0, seed


@criterion(7, "P_subgroup hand case is exactly 0.5 and small cells have no effect")
def test_subgroup_hand_case():
    cells = [SubgroupReport((("g", "a"),), 40, 0.5, ()),
             SubgroupReport((("g", "b"),), 40, 0.0, ())]
    assert p_subgroup(cells, 0.7) == 0.5
    small = SubgroupReport((("g", "c"),), 9, None, (), "n=9 < 10")
    assert p_subgroup(cells + [small], 0.7) == 0.5

    # with real data: nine fully leaked rows in a new cell are added, then removed
    schema, tables, labels = synthesize(SynthSpec.from_json(spec_dict(seed=3, n_rows=600)))
    n = labels.n
    site = tuple("a" if i % 3 else "b" for i in range(n))
    extra_ids = tuple(f"extra{i}" for i in range(9))
    extra_sex = tuple(("male", "female")[i % 2] for i in range(9))
    extra_age = tuple(("young", "adult", "senior")[i % 3] for i in range(9))

    def build(with_extra):
        ids, sexes, ages, sites = (labels.segment_ids, labels.column("sex"),
                                   labels.column("age"), site)
        sex_scores, age_scores = tables[0].scores, tables[1].scores
        if with_extra:
            ids, sexes, ages, sites = (ids + extra_ids, sexes + extra_sex, ages + extra_age,
                                       sites + ("z",) * 9)
            y = np.array([schema["sex"].index(v) for v in extra_sex])
            sex_scores = np.vstack([sex_scores, np.eye(2)[y]])
            y = np.array([schema["age"].index(v) for v in extra_age])
            age_scores = np.vstack([age_scores, np.eye(3)[y]])
        lt = LabelTable(ids, ("sex", "age", "site"), {"sex": sexes, "age": ages, "site": sites})
        st = [ScoreTable("sex", ids, sex_scores, tables[0].columns),
              ScoreTable("age", ids, age_scores, tables[1].columns)]
        return evaluate(schema, st, lt, EvaluationConfig(), groups=["site"])

    without, with_small = build(False), build(True)
    assert [s.key for s in with_small.subgroups if not s.included] == [(("site", "z"),)]
    assert with_small.p_subgroup == without.p_subgroup


@criterion(8, "invariances: monotone transforms, column shuffles, relabeling, SBLS linearity")
def test_invariance_suite():
    rng = np.random.default_rng(8)
    for _ in range(50):
        k = int(rng.integers(2, 6))
        n = int(rng.integers(20, 150))
        labels = rng.integers(0, k, size=n)
        if np.unique(labels).size < 2:
            continue
        scores = np.round(rng.normal(size=(n, k)), 1)
        base = align_permutation(scores, labels, k)
        for c in range(k):
            mask = labels == c
            if mask.any() and not mask.all():
                assert ovr_auc(np.exp(scores[:, c]), mask) == ovr_auc(scores[:, c], mask)
                assert ovr_auc(scores[:, c] ** 3 + 2, mask) == ovr_auc(scores[:, c], mask)
        sigma = rng.permutation(k)
        assert align_permutation(scores[:, sigma], labels, k).m_auc_star == base.m_auc_star
        counts = rng.integers(0, 20, size=(k, k))
        counts[0, 0] += 1
        p = rng.permutation(k)
        a = mutual_information(ConfusionMatrix("a", counts))
        b = mutual_information(ConfusionMatrix("a", counts[p][:, p]))
        assert a.normalized_mi == b.normalized_mi
    grid = np.arange(0, 1025) / 1024
    w = (0.25, 0.5, 0.25)
    for _ in range(500):
        x, y, z, d = rng.choice(grid, 4)
        assert sbls_value(x, y, z, *w) - sbls_value(d, y, z, *w) == w[0] * (x - d)
        assert sbls_value(x, y, z, *w) - sbls_value(x, d, z, *w) == w[1] * (y - d)
        assert sbls_value(x, y, z, *w) - sbls_value(x, y, d, *w) == w[2] * (z - d)


@criterion(9, "score output and synth datasets are byte-identical across runs")
def test_determinism(tmp_path):
    d = spec_dict(seed=7, n_rows=40, age="noisy")
    a = generate(SynthSpec.from_json(d), tmp_path / "a")
    b = generate(SynthSpec.from_json(d), tmp_path / "b")
    assert a == b
    # frozen digests: the same bytes on every platform
    from test_synth import GOLDEN
    assert a == GOLDEN

    ds = tmp_path / "a"
    args = [sys.executable, "-m", "sbls", "score", "--schema", str(ds / "schema.json"),
            "--labels", str(ds / "labels.csv"), "--scores", str(ds / "sex.csv"),
            "--scores", str(ds / "age.csv"), "--min-subgroup", "3"]
    outs = [subprocess.run(args, capture_output=True, check=True).stdout for _ in range(2)]
    assert outs[0] == outs[1]
    json.loads(outs[0])


@criterion(10, "3,000-row, 2-attribute, 6-intersection pipeline runs in under 5 s")
def test_desk_scale_runtime(tmp_path):
    d = {"seed": 20251016, "n_rows": 3000, "attributes": [
        {"name": "sex", "classes": ["male", "female"], "priors": [0.45, 0.55],
         "linkage": "binormal", "target_auc": 0.62},
        {"name": "age", "classes": ["young", "adult", "senior"], "linkage": "binormal",
         "target_auc": 0.56}]}
    generate(SynthSpec.from_json(d), tmp_path)
    t0 = time.perf_counter()
    from sbls.pipeline import evaluate_files
    r = evaluate_files(tmp_path / "schema.json", [tmp_path / "sex.csv", tmp_path / "age.csv"],
                       tmp_path / "labels.csv")
    elapsed = time.perf_counter() - t0
    intersections = [s for s in r.subgroups if s.level == 2]
    assert len(intersections) == 6
    assert len(r.attributes) == 2
    assert elapsed < 5.0
