from __future__ import annotations

import pytest
from oracles import fold_records

from supplytwin.domain import DESTROYED, INTACT, PACKAGED, ROLE_GATE, AssetState, Role
from supplytwin.errors import Reason, SupplyChainRejected
from supplytwin.harness import IdealWorld
from supplytwin.harness.generator import random_scenario
from supplytwin.ideal import IdealSupplyChain

A, CAT, B = "A" + "1" * 32, "C" + "2" * 32, "B" + "3" * 32
E1, E2, E3 = ("E" + c * 32 for c in "456")

CALLS = {
    "produce": lambda f, p: f.register_area(p, A, CAT),
    "create": lambda f, p: f.create(p, E1, A),
    "transform": lambda f, p: f.transform(p, E3, [E1], CAT),
    "training": lambda f, p: f.training(p, CAT, {}),
    "audit": lambda f, p: f.audit(p, E1, CAT, {}),
    "merge": lambda f, p: f.aggregate(p, B, [E1]),
    "split": lambda f, p: f.disaggregate(p, B),
    "handover": lambda f, p: f.handover_start(p, E1, "x"),
    "receive": lambda f, p: f.handover_receive(p, E1, "x"),
    "reject": lambda f, p: f.handover_reject(p, E1, "x"),
    "update": lambda f, p: f.update(p, E1, "destroyed"),
}


def rejected(fn) -> Reason | None:
    try:
        fn()
    except SupplyChainRejected as exc:
        return exc.reason
    return None


def chain():
    out = []
    fsc = IdealSupplyChain(deliver=lambda party, msg: out.append((party, msg)))
    return fsc, out


@pytest.mark.parametrize("role", list(Role))
@pytest.mark.parametrize("op", sorted(CALLS))
def test_role_gate(role, op):
    fsc, out = chain()
    fsc.register("p", role)
    reason = rejected(lambda: CALLS[op](fsc, "p"))
    if role in ROLE_GATE[op]:
        assert reason is not Reason.WRONG_ROLE
    else:
        assert reason is Reason.WRONG_ROLE
        assert out[-1] == ("p", ["bot", op, "WrongRole"])
        assert fsc.state.records == []


def test_unregistered_caller():
    fsc, _ = chain()
    assert rejected(lambda: fsc.create("nobody", E1, A)) is Reason.NOT_REGISTERED
    fsc.register("p", Role.OTHER)
    assert rejected(lambda: fsc.register("p", Role.OTHER)) is Reason.ALREADY_REGISTERED


def test_life_cycle_and_confirmations():
    fsc, out = chain()
    for p, r in (("farm", Role.PRODUCER), ("dairy", Role.MANUFACTURER)):
        fsc.register(p, r)
    fsc.register_area("farm", A, CAT)
    fsc.create("farm", E1, A)
    fsc.create("farm", E2, A)
    fsc.aggregate("farm", B, [E1, E2])
    assert fsc.state.states[E1] == PACKAGED
    fsc.handover_start("farm", B, "dairy")
    assert fsc.state.states[B] == AssetState.trans("dairy")
    assert rejected(lambda: fsc.handover_start("farm", B, "dairy")) is Reason.NOT_INTACT
    fsc.handover_receive("dairy", B, "farm")
    assert fsc.state.owners[E1] == "dairy"
    fsc.disaggregate("dairy", B)
    assert fsc.state.states[B] == DESTROYED and fsc.state.states[E1] == INTACT
    fsc.transform("dairy", E3, [E1, E2], CAT)
    assert rejected(lambda: fsc.update("dairy", E1, "destroyed")) is Reason.ILLEGAL_TRANSITION
    fsc.update("dairy", E3, "destroyed", proof="eaten")
    assert ("dairy", ["received", B, "farm", "dairy"]) in out
    assert ("farm", ["received", B, "farm", "dairy"]) in out
    history = fsc.read(E3)
    assert [r.payload.get("proof") for r in history][-1] == "eaten"
    assert fold_records(fsc.state.records) == (fsc.state.owners, fsc.state.states)


def test_reject_returns_to_sender():
    fsc, _ = chain()
    fsc.register("farm", Role.PRODUCER)
    fsc.register("shop", Role.OTHER)
    fsc.register_area("farm", A, CAT)
    fsc.create("farm", E1, A)
    fsc.handover_start("farm", E1, "shop")
    assert rejected(lambda: fsc.handover_receive("farm", E1, "farm")) is Reason.NOT_DESIGNEE
    fsc.handover_reject("shop", E1, "farm")
    assert fsc.state.owners[E1] == "farm" and fsc.state.states[E1] == INTACT
    assert rejected(lambda: fsc.handover_receive("shop", E1, "farm")) is Reason.NOT_IN_TRANSIT


@pytest.mark.parametrize("seed", range(30))
def test_invariants_on_random_runs(seed):
    world = IdealWorld(random_scenario(seed))
    world.run()
    s = world.fsc.state
    for contents in s.batch_contents.values():
        assert all(s.states[m] == PACKAGED for m in contents)
    assert s.clock == max((r.t for r in s.records), default=0)
    assert [r.t for r in s.records] == sorted(r.t for r in s.records)
    assert fold_records(s.records) == (s.owners, s.states)
