"""Adversary strategy library run against the real protocol.

Each strategy builds a small scenario in which a corrupted party ``mallory``
tries one specific illegal action. A run succeeds when the designated reject
reason fires and the asset histories and device registry equal those of the
same scenario with the attack steps deleted.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable

from ..domain import canonical_json
from ..errors import Reason
from .scenario import Scenario
from .transcript import normalize
from .worlds import RealWorld

ATTACKER = "mallory"

_CATEGORIES = [{"name": "milk", "mean": [5, 5, 5, 5, 5, 5, 5, 5]}]
_ITEMS = [{"name": n, "category": "milk"} for n in ("s1", "s2", "s3", "milk1", "milk2")]


def _scenario(seed: int, name: str, attacker_role: str, steps: list[tuple[str, str, dict]],
              attack: set[int], extra_parties: list[tuple[str, str]] = ()) -> tuple[Scenario, set[int]]:
    parties = [("farm", "F"), ("dairy", "M"), (ATTACKER, attacker_role), *extra_parties]
    doc = {
        "name": name,
        "seed": seed,
        "corrupted": [ATTACKER],
        "parties": [{"id": p, "role": r} for p, r in parties],
        "categories": _CATEGORIES,
        "items": _ITEMS,
        "steps": [{"actor": a, "op": op, "args": args} for a, op, args in steps],
    }
    return Scenario.from_json(doc), attack


def _members(*extra: str) -> list[tuple[str, str, dict]]:
    return [(p, "register", {}) for p in ("farm", "dairy", ATTACKER, *extra)]


def _farm_items() -> list[tuple[str, str, dict]]:
    return [
        ("farm", "produce", {"area": "pasture", "category": "milk"}),
        ("farm", "create", {"item": "milk1", "area": "pasture"}),
    ]


def forge_credential(seed: int):
    steps = _members() + [
        (ATTACKER, "forge_credential", {"role": "F", "command": {
            "op": "produce", "args": {"area": "stolen", "category": "milk"}}}),
        (ATTACKER, "forge_credential", {"role": "Registrar", "command": {
            "op": "produce", "args": {"area": "stolen2", "category": "milk"}}}),
    ]
    return _scenario(seed, "forge-credential", "O", steps, {3, 4})


def forge_transaction(seed: int):
    steps = _members() + _farm_items() + [
        (ATTACKER, "forge_signature", {"victim": "farm", "command": {
            "op": "handover", "args": {"asset": "milk1", "from": "farm", "to": ATTACKER}}}),
        (ATTACKER, "forge_signature", {"victim": "farm", "command": {
            "op": "update", "args": {"asset": "milk1", "newstate": "destroyed"}}}),
    ]
    return _scenario(seed, "forge-transaction", "O", steps, {5, 6})


def double_handover(seed: int):
    steps = _members("carol") + [
        (ATTACKER, "produce", {"area": "field", "category": "milk"}),
        (ATTACKER, "create", {"item": "milk1", "area": "field"}),
        (ATTACKER, "handover", {"asset": "milk1", "to": "dairy"}),
        (ATTACKER, "handover", {"asset": "milk1", "to": "carol"}),
        ("dairy", "receive", {"asset": "milk1", "from": ATTACKER}),
        ("carol", "receive", {"asset": "milk1", "from": ATTACKER}),
    ]
    return _scenario(seed, "double-handover", "F", steps, {7}, [("carol", "O")])


def non_owner_write(seed: int):
    steps = _members() + _farm_items() + [
        (ATTACKER, "update", {"asset": "milk1", "newstate": "destroyed"}),
        (ATTACKER, "submit_raw", {"command": {
            "op": "handover", "args": {"asset": "milk1", "from": ATTACKER, "to": "dairy"}}}),
    ]
    return _scenario(seed, "non-owner-write", "M", steps, {5, 6})


def operate_on_destroyed(seed: int):
    steps = _members() + [
        (ATTACKER, "produce", {"area": "field", "category": "milk"}),
        (ATTACKER, "create", {"item": "milk1", "area": "field"}),
        (ATTACKER, "update", {"asset": "milk1", "newstate": "destroyed"}),
        (ATTACKER, "update", {"asset": "milk1", "newstate": "destroyed"}),
    ]
    return _scenario(seed, "operate-on-destroyed", "F", steps, {6})


def aggregate_packaged(seed: int):
    steps = _members() + [
        (ATTACKER, "produce", {"area": "field", "category": "milk"}),
        (ATTACKER, "create", {"item": "milk1", "area": "field"}),
        (ATTACKER, "merge", {"batch": "crate1", "products": ["milk1"]}),
        (ATTACKER, "merge", {"batch": "crate2", "products": ["milk1"]}),
    ]
    return _scenario(seed, "aggregate-packaged", "F", steps, {6})


def retrain_other_category(seed: int):
    steps = _members() + [
        ("farm", "train", {"category": "milk", "samples": ["s1", "s2", "s3"]}),
        (ATTACKER, "request_device", {}),
        (ATTACKER, "train", {"category": "milk", "samples": ["milk1", "milk2", "s1"]}),
        (ATTACKER, "submit_raw", {"command": {"op": "training", "args": {"category": "milk", "fp": {
            "category": "milk", "est_mean": [0.0] * 8, "est_tolerance": [9.0] * 8,
            "trained_at": 0, "trained_by": ATTACKER}}}}),
    ]
    return _scenario(seed, "retrain-other-category", "F", steps, {5, 6})


def audit_with_withdrawn_device(seed: int):
    steps = _members() + _farm_items() + [
        ("farm", "train", {"category": "milk", "samples": ["s1", "s2", "s3"]}),
        (ATTACKER, "request_device", {}),
        (ATTACKER, "stash_audit", {"item": "milk1", "category": "milk"}),
        ("D", "withdraw_device", {"owner": ATTACKER}),
        (ATTACKER, "submit_stash", {}),
    ]
    return _scenario(seed, "audit-with-withdrawn-device", "C", steps, {7, 9})


def issuer_impersonation(seed: int):
    steps = _members() + [
        ("D", "init_device", {}),
        (ATTACKER, "forge_signature", {"victim": "D", "command": {
            "op": "handover_FF", "args": {"device": {"owner": "D"}, "from": "D", "to": ATTACKER}}}),
        (ATTACKER, "forge_signature", {"victim": "D", "command": {
            "op": "create_FF", "args": {"device": {"owner": "D"}, "issuer": "D"}}}),
    ]
    return _scenario(seed, "issuer-impersonation", "O", steps, {4, 5})


@dataclass(frozen=True)
class Strategy:
    name: str
    reason: Reason
    build: Callable[[int], tuple[Scenario, set[int]]]


STRATEGIES: dict[str, Strategy] = {s.name: s for s in (
    Strategy("forge-credential", Reason.BAD_CREDENTIAL, forge_credential),
    Strategy("forge-transaction", Reason.BAD_SIGNATURE, forge_transaction),
    Strategy("double-handover", Reason.NOT_INTACT, double_handover),
    Strategy("non-owner-write", Reason.NOT_OWNER, non_owner_write),
    Strategy("operate-on-destroyed", Reason.ILLEGAL_TRANSITION, operate_on_destroyed),
    Strategy("aggregate-packaged", Reason.NOT_INTACT, aggregate_packaged),
    Strategy("retrain-other-category", Reason.NOT_ORIGINAL_TRAINER, retrain_other_category),
    Strategy("audit-with-withdrawn-device", Reason.DEVICE_INVALID, audit_with_withdrawn_device),
    Strategy("issuer-impersonation", Reason.BAD_SIGNATURE, issuer_impersonation),
)}


@dataclass
class AttackReport:
    strategy: str
    seed: int
    designated: str
    reasons: list[str] = field(default_factory=list)
    illegal_change: bool = False

    @property
    def fired(self) -> bool:
        return self.designated in self.reasons

    @property
    def passed(self) -> bool:
        return self.fired and not self.illegal_change

    def to_json(self) -> dict:
        return {"strategy": self.strategy, "seed": self.seed, "designated": self.designated,
                "fired": self.fired, "reasons": self.reasons, "illegal_change": self.illegal_change,
                "passed": self.passed}


def _footprint(world: RealWorld) -> str:
    """Asset histories and device registry, with ids and times canonicalized."""
    doc = {
        "records": [r.to_json() for r in world.records()],
        "devices": [[d, asdict(e)] for d, e in world.contract.state.devices.items()],
    }
    return canonical_json(normalize(doc))


def _reject_reasons(trace: dict, steps: set[int]) -> list[str]:
    reasons = []
    for n, segment in enumerate(trace["steps"]):
        if n in steps:
            reasons += [msg[2] for _, msg in segment["out"] if msg[0] in ("bot", "bot_FF")]
    return reasons


def run_attack_scenario(strategy: Strategy, scenario: Scenario, attack: set[int], seed: int) -> AttackReport:
    attacked = RealWorld(scenario)
    trace = attacked.run()
    baseline = RealWorld(scenario.without_steps(attack))
    baseline.run()
    return AttackReport(
        strategy=strategy.name,
        seed=seed,
        designated=strategy.reason.value,
        reasons=_reject_reasons(trace, attack),
        illegal_change=_footprint(attacked) != _footprint(baseline),
    )


def attack(name: str, seed: int = 0, scenario: Scenario | None = None) -> AttackReport:
    """Run one strategy. A supplied scenario replaces the built-in one; its
    corrupted parties' steps are then the attack steps."""
    strategy = STRATEGIES[name]
    if scenario is None:
        scenario, steps = strategy.build(seed)
    else:
        steps = {i for i, s in enumerate(scenario.steps) if s.actor in scenario.corrupted}
        seed = scenario.seed
    return run_attack_scenario(strategy, scenario, steps, seed)
