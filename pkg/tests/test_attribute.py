import pytest

from sbls.attribute import HARD, SOFT, AttributeLeakage, auc_excess, bacc_excess, p_attr
from sbls.errors import EmptyAttributeSet


def leak(excess, name="a"):
    return AttributeLeakage(name, 0.5 + excess / 2, excess, SOFT)


def test_auc_excess_clamps_below_chance():
    assert auc_excess(0.3) == 0.0
    assert auc_excess(0.5) == 0.0
    assert auc_excess(1.0) == 1.0
    assert auc_excess(0.75) == 0.5


def test_bacc_excess_normalizes_by_chance():
    assert bacc_excess(1 / 3, 3) == 0.0
    assert bacc_excess(1.0, 4) == 1.0
    assert bacc_excess(0.75, 2) == 0.5
    assert bacc_excess(0.1, 3) == 0.0


def test_p_attr_perfect_and_chance():
    assert p_attr([leak(1.0), leak(1.0, "b")]) == 0.0
    assert p_attr([leak(0.0), leak(0.0, "b")]) == 1.0


def test_p_attr_is_mean_of_excess():
    assert p_attr([leak(0.2), leak(0.4, "b")]) == pytest.approx(0.7, abs=1e-15)


def test_p_attr_needs_attributes():
    with pytest.raises(EmptyAttributeSet):
        p_attr([])


def test_hard_mode_label_round_trips():
    a = AttributeLeakage("age", 0.6, 0.4, HARD)
    assert AttributeLeakage.from_json(a.to_json()) == a
