from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from supplytwin.goods import COUNTERFEIT, CategoryTruth, Counterfeit, GoodsWorld, measure, spawn_item


def test_drift_over_ten_steps():
    truth = CategoryTruth.build("cheese", [5] * 8, 1.0, [0.1] + [0.0] * 7)
    item = spawn_item("wheel", truth, random.Random(0), now=0)
    item.features = (5.0,) * 8
    assert measure(item, 10)[0] == pytest.approx(6.0)
    assert measure(item, 10)[1:] == (5.0,) * 7


@given(st.integers(0, 10_000), st.floats(0.1, 5.0))
def test_genuine_features_inside_box(seed, tol):
    truth = CategoryTruth.build("c", [1.0] * 8, tol)
    item = spawn_item("i", truth, random.Random(seed), now=0)
    assert all(abs(f - m) <= tol / 2 for f, m in zip(item.features, truth.mean))


def test_counterfeit_offset():
    truth = CategoryTruth.build("c", [0.0] * 8, 2.0)
    fake = spawn_item("f", Counterfeit.offset_from(truth, 1.5), random.Random(0), now=0)
    assert fake.true_category == COUNTERFEIT
    assert fake.features == (3.0,) * 8


def test_invalid_truths():
    with pytest.raises(ValueError):
        CategoryTruth.build("c", [0.0] * 8, 0.0)
    with pytest.raises(ValueError):
        CategoryTruth.build("c", [0.0] * 3)


def test_world_refuses_duplicate_items():
    world = GoodsWorld()
    truth = CategoryTruth.build("c", [0.0] * 8)
    world.spawn("x", truth, random.Random(0), 0)
    with pytest.raises(ValueError):
        world.spawn("x", truth, random.Random(0), 0)
