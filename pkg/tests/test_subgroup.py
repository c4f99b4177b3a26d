import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbls.data import Attribute, AttributeSchema, LabelTable, ScoreTable, join
from sbls.errors import NoValidSubgroup, UnknownField
from sbls.subgroup import (
    SubgroupReport,
    enumerate_subgroups,
    evaluate_subgroups,
    grouping_levels,
    heatmap_csv,
    key_str,
    p_subgroup,
    parse_key,
    worst_subgroup,
)

SCHEMA = AttributeSchema((Attribute("sex", ("male", "female")),
                          Attribute("age", ("young", "adult", "senior"))))


def report(leak, key=(("g", "x"),), n=20):
    return SubgroupReport(key, n, leak, ())


def test_hand_case_half():
    # 0.7 * (1 - 0.5) + 0.3 * (0.5 / 1.0)
    assert p_subgroup([report(0.5), report(0.0)], 0.7) == 0.5


def test_single_group_and_uniform_groups():
    assert p_subgroup([report(0.0)]) == 1.0
    assert p_subgroup([report(0.2), report(0.2)], 0.7) == pytest.approx(0.7 * 0.8 + 0.3)


def test_every_group_fully_leaked_is_zero():
    assert p_subgroup([report(1.0), report(1.0)]) == 0.0


def test_excluded_cells_do_not_count():
    base = [report(0.5), report(0.0)]
    extra = base + [SubgroupReport((("g", "z"),), 3, None, (), "n=3 < 10")]
    assert p_subgroup(extra) == p_subgroup(base)


def test_no_valid_subgroup():
    with pytest.raises(NoValidSubgroup):
        p_subgroup([SubgroupReport((), 3, None, (), "small")])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=8), st.floats(0, 1))
@settings(max_examples=200, deadline=None)
def test_bounds(leaks, omega):
    v = p_subgroup([report(x) for x in leaks], omega)
    assert 0.0 <= v <= 1.0


def test_key_round_trip():
    key = (("sex", "male"), ("age", "adult"))
    assert key_str(key) == "sex=male;age=adult"
    assert parse_key(key_str(key)) == key
    assert parse_key("") == ()


def test_grouping_levels():
    assert grouping_levels(["sex", "age"]) == [("sex",), ("age",), ("sex", "age")]


def labels_table(n=60):
    sexes = [("male", "female")[i % 2] for i in range(n)]
    ages = [("young", "adult", "senior")[(i // 2) % 3] for i in range(n)]
    ids = tuple(f"s{i}" for i in range(n))
    return LabelTable(ids, ("sex", "age", "site"),
                      {"sex": tuple(sexes), "age": tuple(ages),
                       "site": tuple("b" if i < 50 else "a" for i in range(n))})


def test_cells_follow_schema_order_and_min_size():
    cells = enumerate_subgroups(labels_table(), ["age", "sex"], 10, SCHEMA)
    assert [key_str(c.key) for c in cells] == [
        "sex=male;age=young", "sex=male;age=adult", "sex=male;age=senior",
        "sex=female;age=young", "sex=female;age=adult", "sex=female;age=senior"]
    assert all(c.n == 10 and not c.excluded for c in cells)


def test_metadata_field_sorted_lexically_and_small_cells_flagged():
    cells = enumerate_subgroups(labels_table(), ["site"], 11, SCHEMA)
    assert [(key_str(c.key), c.n, c.excluded) for c in cells] == [
        ("site=a", 10, True), ("site=b", 50, False)]


def test_unknown_grouping_field():
    with pytest.raises(UnknownField):
        enumerate_subgroups(labels_table(), ["dialect"], 10, SCHEMA)


def _joined(labels, rng):
    y = np.array([SCHEMA["sex"].index(v) for v in labels.column("sex")])
    scores = np.column_stack([1 - y, y]) + rng.normal(0, 0.8, size=(labels.n, 2))
    return [join(ScoreTable("sex", labels.segment_ids, scores, ("male", "female")),
                 labels, SCHEMA)]


def test_intersection_cells_with_no_variation_are_excluded():
    labels = labels_table()
    reports = evaluate_subgroups(labels, _joined(labels, np.random.default_rng(0)),
                                 ["sex", "age"], 10, schema=SCHEMA)
    by_key = {key_str(r.key): r for r in reports}
    assert by_key["age=young"].included
    assert not by_key["sex=male"].included
    assert by_key["sex=male"].excluded_reason == "no scored attribute varies within the group"
    assert not by_key["sex=male;age=adult"].included


def test_levels_full_only_intersections():
    labels = labels_table()
    reports = evaluate_subgroups(labels, _joined(labels, np.random.default_rng(0)),
                                 ["site"], 10, schema=SCHEMA, levels="full")
    assert [key_str(r.key) for r in reports] == ["site=a", "site=b"]
    with pytest.raises(ValueError):
        evaluate_subgroups(labels, [], ["site"], 10, levels="some")


def test_worst_and_heatmap():
    a = SubgroupReport((("g", "a"),), 12, 0.25, (("sex", 0.625),))
    b = SubgroupReport((("g", "b"),), 11, 0.5, (("sex", 0.75),))
    c = SubgroupReport((("g", "c"),), 2, None, (("sex", None),), "n=2 < 10")
    assert worst_subgroup([a, b, c]) is b
    assert heatmap_csv([a, b, c], ["sex"]) == (
        "group_key,n,L_g,sex_auc\n"
        "g=a,12,0.25,0.625\n"
        "g=b,11,0.5,0.75\n"
        "g=c,2,,\n")
    assert SubgroupReport.from_json(a.to_json()) == a
