from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from supplytwin.domain import canonical_json
from supplytwin.errors import ScenarioError
from supplytwin.harness import (
    Scenario,
    assert_equivalence,
    canonical,
    normalize,
    run_ideal,
    run_real,
    shipped,
    shipped_names,
)
from supplytwin.harness.generator import MAX_PARTIES, MAX_STEPS, random_scenario


def scenario(steps, corrupted=(), parties=(("farm", "F"), ("shop", "O"))):
    return Scenario.from_json({
        "seed": 5,
        "corrupted": list(corrupted),
        "parties": [{"id": p, "role": r} for p, r in parties],
        "categories": [{"name": "milk"}],
        "steps": [{"actor": a, "op": op, "args": args} for a, op, args in steps],
    })


HONEST = [
    ("farm", "register", {}),
    ("shop", "register", {}),
    ("farm", "produce", {"area": "field", "category": "milk"}),
    ("farm", "create", {"item": "jug", "area": "field"}),
    ("farm", "handover", {"asset": "jug", "to": "shop"}),
    ("shop", "receive", {"asset": "jug", "from": "farm"}),
]


def test_empty_scenario_has_only_genesis_and_issuer():
    trace = run_real(scenario([]))
    assert trace["steps"] == []
    assert [(tx["op"], tx["args"]["party"]) for tx in trace["ledger"]] == [("enroll", "D")]
    assert [e["ev"] for e in trace["setup"]["adv"]] == ["genesis", "ledger"]
    assert assert_equivalence(scenario([])).equal


def test_runs_are_deterministic():
    s = Scenario.load(shipped("mozzarella"))
    assert canonical_json(run_real(s)) == canonical_json(run_real(s))
    assert canonical_json(run_ideal(s)) == canonical_json(run_ideal(s))


def test_honest_create_handover_receive():
    trace = run_real(scenario(HONEST))
    confirmations = [m for seg in trace["steps"][3:] for _, m in seg["out"]]
    assert [m[0] for m in confirmations] == ["created", "handover", "handover", "received", "received"]
    ops = [tx["op"] for tx in trace["ledger"]]
    assert ops[-3:] == ["create", "handover", "received"]
    assert assert_equivalence(scenario(HONEST)).equal


def test_corrupted_member_legal_ops_equal():
    assert assert_equivalence(scenario(HONEST, corrupted=["shop"])).equal
    assert assert_equivalence(scenario(HONEST, corrupted=["farm"])).equal


def test_corrupted_registration_is_signed_by_simulator():
    ideal = run_ideal(scenario(HONEST[:2], corrupted=["shop"]))
    enrolls = [tx for tx in ideal["ledger"] if tx["op"] == "enroll"]
    assert {tx["args"]["party"] for tx in enrolls} == {"D", "farm", "shop"}


def test_broken_simulator_diverges_at_first_mismatch():
    verdict = assert_equivalence(scenario(HONEST), broken=True)
    assert not verdict.equal
    assert verdict.divergence.where.startswith(("step", "setup", "ledger"))
    assert verdict.to_json()["equal"] is False


@pytest.mark.parametrize("name", shipped_names())
def test_shipped_scenarios_equal(name):
    assert assert_equivalence(Scenario.load(shipped(name))).equal


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_normalize_idempotent(seed):
    trace = run_real(random_scenario(seed, max_steps=15))
    once = normalize(trace)
    assert normalize(once) == once
    assert canonical(once) == canonical(trace)


@settings(max_examples=15, deadline=None)
@given(st.integers(10**6, 2 * 10**6))
def test_random_scenarios_equal(seed):
    s = random_scenario(seed)
    assert len(s.steps) <= MAX_STEPS
    assert len(s.parties) <= MAX_PARTIES
    assert len(s.corrupted) <= 1
    assert assert_equivalence(s).equal


@pytest.mark.parametrize("doc", [
    {"seed": 1, "parties": [], "steps": [{"actor": "ghost", "op": "register"}]},
    {"seed": 1, "parties": [{"id": "x", "role": "F"}], "steps": [{"actor": "x", "op": "fly"}]},
    {"seed": 1, "parties": [{"id": "x", "role": "F"}], "corrupted": ["D"], "steps": []},
    {"seed": 1, "parties": [{"id": "Reg", "role": "O"}], "steps": []},
    {"seed": "one", "parties": [], "steps": []},
])
def test_malformed_scenarios(doc):
    with pytest.raises(ScenarioError):
        Scenario.from_json(doc)
