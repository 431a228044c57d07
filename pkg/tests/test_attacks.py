from __future__ import annotations

import pytest

from supplytwin.errors import Reason
from supplytwin.harness.attacks import STRATEGIES, attack
from supplytwin.harness.ladder import forged_credentials, forged_signatures, hybrid_ladder
from supplytwin.harness import Scenario, shipped


@pytest.mark.parametrize("name", sorted(STRATEGIES))
def test_strategy_fires_without_state_change(name):
    for seed in range(3):
        report = attack(name, seed)
        assert report.fired, report.reasons
        assert not report.illegal_change
        assert report.to_json()["passed"]


def test_designated_reasons():
    assert STRATEGIES["forge-credential"].reason is Reason.BAD_CREDENTIAL
    assert STRATEGIES["double-handover"].reason is Reason.NOT_INTACT
    assert STRATEGIES["audit-with-withdrawn-device"].reason is Reason.DEVICE_INVALID
    assert len(STRATEGIES) == 9


def test_double_handover_single_transfer():
    from supplytwin.harness.attacks import double_handover
    from supplytwin.harness import RealWorld
    scenario, _ = double_handover(0)
    world = RealWorld(scenario)
    world.run()
    milk = world.names.ids["milk1"]
    assert world.owners()[milk] == "dairy"
    assert sum(r.event.value == "handoverEnded" for r in world.records() if r.asset == milk) == 1


def test_custom_attack_scenario():
    from supplytwin.harness.attacks import forge_credential
    built, _ = forge_credential(4)
    report = attack("forge-credential", scenario=Scenario.from_json(built.to_json()))
    assert report.passed and report.seed == 4


def test_forgeries_small():
    a, b = forged_credentials(1, 50), forged_signatures(1, 50)
    assert a.passed and a.reasons == {"BadCredential": 50}
    assert b.passed and b.reasons == {"BadSignature": 50}


def test_ladder_honest_and_broken():
    s = Scenario.load(shipped("honest-handover"))
    assert hybrid_ladder(s, attempts=20).passed
    broken = hybrid_ladder(s, broken=True, forgeries=False)
    assert not broken.passed
    assert [c["equal"] for c in broken.comparisons] == [True, False, True]
