"""The hybrid ladder between the ideal and the real execution.

H3  ideal supply chain, simulator emulates the registrar keys itself
H2  as H3 but credentials come from the registration authority machine
H1  real protocol, parties sign commands, contract folds an internal list
H0  real protocol over the ledger functionality

Adjacent levels must give equal normalized traces. Two forgery tests sit on
the boundaries where a signature check is introduced.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..domain import Kind, canonical_bytes
from ..errors import Reason
from ..ledger import Credential, Transaction
from ..real.contract import authenticate
from .scenario import Scenario
from .simulator import MACHINE, SIMULATED
from .transcript import first_divergence
from .worlds import IdealWorld, RealWorld

LEVELS = ("H3", "H2", "H1", "H0")
DEFAULT_ATTEMPTS = 1000


def _world(level: str, scenario: Scenario, broken: bool):
    if level == "H3":
        return IdealWorld(scenario, registrar=SIMULATED, broken=broken)
    if level == "H2":
        return IdealWorld(scenario, registrar=MACHINE, broken=broken)
    if level == "H1":
        return RealWorld(scenario, storage="list")
    if level == "H0":
        return RealWorld(scenario, storage="ledger")
    raise ValueError(level)


@dataclass
class ForgeryResult:
    name: str
    boundary: str
    attempts: int
    accepted: int
    reasons: dict[str, int]
    expected: str

    @property
    def passed(self) -> bool:
        return self.accepted == 0 and self.reasons == {self.expected: self.attempts}

    def to_json(self) -> dict:
        return {"name": self.name, "boundary": self.boundary, "attempts": self.attempts,
                "accepted": self.accepted, "reasons": self.reasons, "expected": self.expected,
                "passed": self.passed}


@dataclass
class LadderReport:
    levels: dict[str, dict] = field(default_factory=dict)
    comparisons: list[dict] = field(default_factory=list)
    forgeries: list[ForgeryResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c["equal"] for c in self.comparisons) and all(f.passed for f in self.forgeries)

    def to_json(self) -> dict:
        return {"passed": self.passed, "comparisons": self.comparisons,
                "forgeries": [f.to_json() for f in self.forgeries]}


def _forgery_target(seed: int) -> Scenario:
    return Scenario.from_json({
        "seed": seed,
        "corrupted": ["mallory"],
        "parties": [{"id": "farm", "role": "F"}, {"id": "mallory", "role": "O"}],
        "categories": [{"name": "milk"}],
        "steps": [
            {"actor": "farm", "op": "register"},
            {"actor": "mallory", "op": "register"},
            {"actor": "farm", "op": "produce", "args": {"area": "pasture", "category": "milk"}},
            {"actor": "farm", "op": "create", "args": {"item": "milk1", "area": "pasture"}},
        ],
    })


def _command(rng: random.Random, world, victim: str) -> tuple[str, dict]:
    item, area, cat = (world.names.ids[n] for n in ("milk1", "pasture", "milk"))
    return rng.choice([
        ("update", {"asset": item, "newstate": "destroyed", "proof": None}),
        ("handover", {"asset": item, "from": victim, "to": "mallory"}),
        ("produce", {"area": world.registry.mint(Kind.AREA, rng), "category": cat}),
        ("create", {"item": world.registry.mint(Kind.ELEMENT, rng), "area": area, "category": None}),
    ])


def _tally(world, attempts: list[Transaction], genesis, sig) -> tuple[int, dict[str, int]]:
    """Submit every forgery and check that none changed the asset history."""
    before = len(world.records())
    reasons: dict[str, int] = {}
    for tx in attempts:
        reason = authenticate(tx, genesis, sig)
        key = reason.value if reason is not None else "accepted"
        reasons[key] = reasons.get(key, 0) + 1
        world.storage.submit(tx, "mallory")
    changed = len(world.records()) - before
    return changed + reasons.get("accepted", 0), reasons


def forged_credentials(seed: int = 0, attempts: int = DEFAULT_ATTEMPTS) -> ForgeryResult:
    """Credentials never signed by the registrar, at the H3/H2 boundary."""
    world = _world("H2", _forgery_target(seed), broken=False)
    world.run()
    sim, rng = world.sim, random.Random(f"{seed}:forge-credential")
    txs = []
    for n in range(attempts):
        party = rng.choice(["mallory", "farm", "ghost"])
        role = rng.choice(["F", "M", "C", "O", "D", "Registrar"])
        pk = sim.sig.session("mallory").pk.hex()
        cred = Credential(party, pk, {"role": role}, rng.randbytes(64).hex())
        op, args = _command(rng, world, party)
        payload = {"op": op, "args": args, "nonce": 10_000 + n}
        sig = sim.sig.sign("mallory", canonical_bytes(payload)).hex()
        txs.append(Transaction(payload, sig, cred.to_json()))
    accepted, reasons = _tally(world, txs, sim.genesis, sim.sig)
    return ForgeryResult("forged-credential", "H3/H2", attempts, accepted, reasons, Reason.BAD_CREDENTIAL.value)


def forged_signatures(seed: int = 0, attempts: int = DEFAULT_ATTEMPTS) -> ForgeryResult:
    """Valid victim credential with a signature under the wrong key, at the H2/H1 boundary."""
    world = _world("H1", _forgery_target(seed), broken=False)
    world.run()
    rng = random.Random(f"{seed}:forge-signature")
    victim = world.machines["mallory"].victim_credential("farm")
    txs = []
    for n in range(attempts):
        op, args = _command(rng, world, "farm")
        payload = {"op": op, "args": args, "nonce": 10_000 + n}
        if rng.random() < 0.5:
            sig = world.sig.sign("mallory", canonical_bytes(payload)).hex()
        else:
            sig = rng.randbytes(64).hex()
        txs.append(Transaction(payload, sig, victim))
    accepted, reasons = _tally(world, txs, world.contract.genesis, world.sig)
    return ForgeryResult("forged-signature", "H2/H1", attempts, accepted, reasons, Reason.BAD_SIGNATURE.value)


def hybrid_ladder(scenario: Scenario, broken: bool = False, attempts: int = DEFAULT_ATTEMPTS,
                  forgeries: bool = True) -> LadderReport:
    report = LadderReport()
    for level in LEVELS:
        report.levels[level] = _world(level, scenario, broken).run()
    for left, right in zip(LEVELS, LEVELS[1:]):
        d = first_divergence(report.levels[left], report.levels[right])
        entry = {"pair": f"{left}={right}", "equal": d is None}
        if d is not None:
            entry["divergence"] = {"where": d.where, left: d.real, right: d.ideal}
        report.comparisons.append(entry)
    if forgeries:
        report.forgeries = [forged_credentials(scenario.seed, attempts), forged_signatures(scenario.seed, attempts)]
    return report
