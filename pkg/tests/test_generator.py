from __future__ import annotations

from collections import Counter

from supplytwin.harness.generator import MAX_PARTIES, MAX_STEPS, ScenarioGenerator, random_scenario
from supplytwin.harness.scenario import ATTACK_OPS


def test_generation_is_seeded():
    assert random_scenario(7).to_json() == random_scenario(7).to_json()
    assert random_scenario(7).to_json() != random_scenario(8).to_json()


def test_bounds_and_coverage():
    ops, corrupted = Counter(), 0
    for seed in range(100):
        s = random_scenario(seed)
        assert 0 < len(s.steps) <= MAX_STEPS
        assert len(s.parties) <= MAX_PARTIES
        assert len(s.corrupted) <= 1
        corrupted += bool(s.corrupted)
        ops.update(step.op for step in s.steps)
    for op in ("register", "produce", "create", "train", "audit", "merge", "split", "transform",
               "handover", "receive", "reject", "update", "read"):
        assert ops[op] > 0, op
    assert any(ops[op] for op in ATTACK_OPS)
    assert 20 < corrupted < 80


def test_honest_only_option():
    assert all(not ScenarioGenerator(seed, corrupt=False).generate().corrupted for seed in range(20))
