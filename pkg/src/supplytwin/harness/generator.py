"""Seeded random scenarios for the dual-world corpus.

A light model of the supply chain steers most steps toward operations that
should succeed; the rest are drawn blindly and are usually rejected. Both
kinds must produce the same trace in both worlds.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..real.machines import ISSUER
from .scenario import Scenario

MAX_PARTIES = 6
MAX_STEPS = 50
LEGAL_BIAS = 0.8

# Relative weight of each legal operation; life-cycle steps dominate.
WEIGHTS = {
    "produce": 1, "create": 6, "train": 2, "audit": 3, "merge": 4, "split": 4, "transform": 4,
    "handover": 6, "receive": 6, "reject": 2, "update": 1, "read": 1, "request_device": 1,
    "handover_device": 1, "withdraw_device": 1, "init_device": 1, "attack": 4,
}


@dataclass
class _Model:
    roles: dict[str, str]
    registered: set[str] = field(default_factory=set)
    owners: dict[str, str] = field(default_factory=dict)
    states: dict[str, str] = field(default_factory=dict)
    kinds: dict[str, str] = field(default_factory=dict)
    areas: dict[str, str] = field(default_factory=dict)
    contents: dict[str, list[str]] = field(default_factory=dict)
    trainers: dict[str, str] = field(default_factory=dict)
    devices: set[str] = field(default_factory=set)
    unused: dict[str, list[str]] = field(default_factory=dict)
    counter: int = 0

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    def owned(self, party: str, state: str = "intact", kind: str | None = None) -> list[str]:
        return sorted(a for a, o in self.owners.items()
                      if o == party and self.states[a] == state and (kind is None or self.kinds[a] == kind))


class ScenarioGenerator:
    def __init__(self, seed: int, max_steps: int = MAX_STEPS, max_parties: int = MAX_PARTIES,
                 corrupt: bool | None = None):
        self.seed = seed
        self.rng = random.Random(f"generator:{seed}")
        self.max_steps = max_steps
        self.max_parties = max_parties
        self.corrupt = corrupt

    def generate(self) -> Scenario:
        rng = self.rng
        members = rng.randint(2, self.max_parties - 1)
        roles = ["F", "M"] + [rng.choice("FMCO") for _ in range(members - 2)]
        parties = {f"p{i}": r for i, r in enumerate(roles)}
        corrupt = self.corrupt if self.corrupt is not None else rng.random() < 0.5
        corrupted = [rng.choice(sorted(parties))] if corrupt else []
        categories = [{"name": f"cat{i}", "tolerance": 1.0} for i in range(2)]
        items, unused = [], {}
        for c in categories:
            names = [f"{c['name']}_x{j}" for j in range(rng.randint(4, 8))]
            items += [{"name": n, "category": c["name"]} for n in names]
            unused[c["name"]] = names
        items.append({"name": "fake", "counterfeit": {"of": "cat0", "offset": 3.0}})
        model = _Model(roles={**parties, ISSUER: "D"}, unused=unused)
        steps = []
        n_steps = rng.randint(1, self.max_steps)
        for _ in range(n_steps):
            steps.append(self._legal(model, corrupted) if rng.random() < LEGAL_BIAS
                         else self._blind(model, corrupted))
        doc = {
            "name": f"random-{self.seed}",
            "seed": self.seed,
            "corrupted": corrupted,
            "parties": [{"id": p, "role": r} for p, r in parties.items()],
            "categories": categories,
            "items": items,
            "steps": [s for s in steps if s is not None],
        }
        return Scenario.from_json(doc)

    # -- steps that the model expects to succeed ---------------------------------
    def _legal(self, m: _Model, corrupted: list[str]) -> dict | None:
        rng = self.rng
        unregistered = sorted(p for p in m.roles if p not in m.registered and p != ISSUER)
        if unregistered and (not m.registered or rng.random() < 0.5):
            p = rng.choice(unregistered)
            m.registered.add(p)
            return {"actor": p, "op": "register"}
        candidates = []
        for p in sorted(m.registered):
            role = m.roles[p]
            creator = role in ("F", "M")
            if creator:
                if not any(m.owners.get(a) == p for a in m.areas) or self.rng.random() < 0.2:
                    candidates.append(("produce", p))
                if any(m.owners.get(a) == p for a in m.areas):
                    candidates.append(("create", p))
                if any(len(v) >= 3 and m.trainers.get(c, p) == p for c, v in m.unused.items()):
                    candidates.append(("train", p))
            intact = [a for a in m.owned(p) if m.kinds[a] in ("E", "B")]
            if intact:
                candidates += [("handover", p), ("update", p), ("read", p)]
                if any(m.kinds[a] == "E" for a in intact):
                    candidates += [("merge", p), ("audit", p)]
                    if role == "M":
                        candidates.append(("transform", p))
                if any(m.kinds[a] == "B" for a in intact):
                    candidates.append(("split", p))
            if any(s == f"trans:{p}" for s in m.states.values()):
                candidates += [("receive", p), ("reject", p)]
            if p not in m.devices:
                candidates.append(("request_device", p))
            elif len(m.registered) > 1:
                candidates.append(("handover_device", p))
        if m.devices:
            candidates.append(("withdraw_device", ISSUER))
        candidates.append(("init_device", ISSUER))
        if corrupted and corrupted[0] in m.registered:
            candidates.append(("attack", corrupted[0]))
        op, p = rng.choices(candidates, weights=[WEIGHTS[c[0]] for c in candidates])[0]
        return getattr(self, f"_do_{op}")(m, p)

    def _do_produce(self, m, p):
        area, cat = m.fresh("area"), self.rng.choice(sorted(m.unused))
        m.owners[area], m.states[area], m.kinds[area], m.areas[area] = p, "intact", "A", cat
        return {"actor": p, "op": "produce", "args": {"area": area, "category": cat}}

    def _do_create(self, m, p):
        area = self.rng.choice(sorted(a for a in m.areas if m.owners.get(a) == p))
        pool = m.unused[m.areas[area]]
        item = pool.pop(self.rng.randrange(len(pool))) if pool else m.fresh("item")
        m.owners[item], m.states[item], m.kinds[item] = p, "intact", "E"
        return {"actor": p, "op": "create", "args": {"item": item, "area": area}}

    def _do_train(self, m, p):
        cat = self.rng.choice(sorted(c for c, v in m.unused.items() if len(v) >= 3 and m.trainers.get(c, p) == p))
        samples = [m.unused[cat].pop() for _ in range(3)]
        m.trainers[cat] = p
        m.devices.add(p)
        return {"actor": p, "op": "train", "args": {"category": cat, "samples": samples}}

    def _do_audit(self, m, p):
        item = self.rng.choice([a for a in m.owned(p) if m.kinds[a] == "E"])
        cat = self.rng.choice(sorted(m.unused))
        m.devices.add(p)
        args = {"item": item, "category": cat}
        if self.rng.random() < 0.2:
            args["physical"] = "fake"
        return {"actor": p, "op": "audit", "args": args}

    def _do_merge(self, m, p):
        elems = [a for a in m.owned(p) if m.kinds[a] == "E"]
        products = self.rng.sample(elems, self.rng.randint(1, min(3, len(elems))))
        batch = m.fresh("batch")
        for a in products:
            m.states[a] = "packaged"
        m.owners[batch], m.states[batch], m.kinds[batch], m.contents[batch] = p, "intact", "B", products
        return {"actor": p, "op": "merge", "args": {"batch": batch, "products": products}}

    def _do_split(self, m, p):
        batch = self.rng.choice([a for a in m.owned(p) if m.kinds[a] == "B"])
        for a in m.contents.pop(batch, []):
            if m.states.get(a) == "packaged":
                m.states[a] = "intact"
        m.states[batch] = "destroyed"
        return {"actor": p, "op": "split", "args": {"batch": batch}}

    def _do_transform(self, m, p):
        elems = [a for a in m.owned(p) if m.kinds[a] == "E"]
        inputs = self.rng.sample(elems, self.rng.randint(1, min(2, len(elems))))
        item = m.fresh("product")
        for a in inputs:
            m.states[a] = "destroyed"
        m.owners[item], m.states[item], m.kinds[item] = p, "intact", "E"
        return {"actor": p, "op": "transform",
                "args": {"item": item, "inputs": inputs, "category": self.rng.choice(sorted(m.unused))}}

    def _owner_change(self, m, asset, to):
        m.owners[asset] = to
        for a in m.contents.get(asset, []):
            self._owner_change(m, a, to)

    def _do_handover(self, m, p):
        asset = self.rng.choice([a for a in m.owned(p) if m.kinds[a] in ("E", "B")])
        others = sorted(q for q in m.registered if q != p) or [p]
        to = self.rng.choice(others)
        m.states[asset] = f"trans:{to}"
        return {"actor": p, "op": "handover", "args": {"asset": asset, "to": to}}

    def _pending(self, m, p):
        asset = self.rng.choice(sorted(a for a, s in m.states.items() if s == f"trans:{p}"))
        return asset, m.owners[asset]

    def _do_receive(self, m, p):
        asset, sender = self._pending(m, p)
        m.states[asset] = "intact"
        self._owner_change(m, asset, p)
        return {"actor": p, "op": "receive", "args": {"asset": asset, "from": sender}}

    def _do_reject(self, m, p):
        asset, sender = self._pending(m, p)
        m.states[asset] = "intact"
        return {"actor": p, "op": "reject", "args": {"asset": asset, "from": sender}}

    def _do_update(self, m, p):
        asset = self.rng.choice([a for a in m.owned(p) if m.kinds[a] in ("E", "B")])
        m.states[asset] = "destroyed"
        return {"actor": p, "op": "update", "args": {"asset": asset, "newstate": "destroyed"}}

    def _do_read(self, m, p):
        return {"actor": p, "op": "read", "args": {"asset": self.rng.choice(sorted(m.owners))}}

    def _do_request_device(self, m, p):
        m.devices.add(p)
        return {"actor": p, "op": "request_device"}

    def _do_handover_device(self, m, p):
        to = self.rng.choice(sorted(q for q in m.registered if q != p))
        m.devices.discard(p)
        m.devices.add(to)
        return {"actor": p, "op": "handover_device", "args": {"to": to}}

    def _do_withdraw_device(self, m, p):
        owner = self.rng.choice(sorted(m.devices))
        m.devices.discard(owner)
        return {"actor": ISSUER, "op": "withdraw_device", "args": {"owner": owner}}

    def _do_init_device(self, m, p):
        return {"actor": ISSUER, "op": "init_device"}

    def _do_attack(self, m, p):
        rng = self.rng
        victims = sorted(q for q in m.registered if q != p) or [p]
        command = self._random_command(m)
        choice = rng.randrange(5)
        if choice == 0:
            return {"actor": p, "op": "forge_credential",
                    "args": {"role": rng.choice(["F", "M", "C", "D", "Registrar"]), "command": command}}
        if choice == 1:
            return {"actor": p, "op": "forge_signature", "args": {"victim": rng.choice(victims), "command": command}}
        if choice == 2:
            return {"actor": p, "op": "replay", "args": {"index": rng.randrange(0, 12)}}
        if choice == 3:
            return {"actor": p, "op": "submit_raw", "args": {"command": command}}
        items = sorted(a for a in m.kinds if m.kinds[a] == "E")
        if not items or rng.random() < 0.5:
            return {"actor": p, "op": "submit_stash"}
        return {"actor": p, "op": "stash_audit", "args": {"item": rng.choice(items), "category": "cat0"}}

    def _random_command(self, m: _Model) -> dict:
        rng = self.rng
        assets = sorted(m.owners) or ["ghost"]
        parties = sorted(m.roles)
        options = [
            {"op": "handover", "args": {"asset": rng.choice(assets), "from": rng.choice(parties), "to": rng.choice(parties)}},
            {"op": "update", "args": {"asset": rng.choice(assets), "newstate": "destroyed"}},
            {"op": "produce", "args": {"area": m.fresh("area"), "category": "cat1"}},
            {"op": "split", "args": {"batch": rng.choice(assets)}},
            {"op": "received", "args": {"asset": rng.choice(assets), "by": rng.choice(parties), "from": rng.choice(parties)}},
            {"op": "create_FF", "args": {"device": {"owner": ISSUER}, "issuer": ISSUER}},
        ]
        return rng.choice(options)

    # -- steps drawn without looking at the model ---------------------------------
    def _blind(self, m: _Model, corrupted: list[str]) -> dict:
        rng = self.rng
        actor = rng.choice(sorted(p for p in m.roles if p != ISSUER))
        assets = sorted(m.owners) or ["ghost"]
        parties = sorted(m.roles)
        elems = sorted(a for a in m.kinds if m.kinds[a] == "E") or ["ghost"]
        physical = [n for v in m.unused.values() for n in v] + ["fake"]
        pick = rng.randrange(10)
        if pick == 0:
            return {"actor": actor, "op": "handover", "args": {"asset": rng.choice(assets), "to": rng.choice(parties)}}
        if pick == 1:
            return {"actor": actor, "op": "receive", "args": {"asset": rng.choice(assets), "from": rng.choice(parties)}}
        if pick == 2:
            return {"actor": actor, "op": "update", "args": {"asset": rng.choice(assets), "newstate": "destroyed"}}
        if pick == 3:
            return {"actor": actor, "op": "merge", "args": {"batch": m.fresh("batch"), "products": [rng.choice(elems)]}}
        if pick == 4:
            return {"actor": actor, "op": "transform",
                    "args": {"item": m.fresh("product"), "inputs": [rng.choice(elems)], "category": "cat0"}}
        if pick == 5:
            return {"actor": actor, "op": "train",
                    "args": {"category": rng.choice(["cat0", "cat1"]), "samples": rng.sample(physical, min(len(physical), 3))}}
        if pick == 6:
            return {"actor": actor, "op": "audit",
                    "args": {"item": rng.choice(elems), "category": "cat1", "physical": rng.choice(physical)}}
        if pick == 7:
            area = sorted(m.areas) or ["nowhere"]
            return {"actor": actor, "op": "create", "args": {"item": m.fresh("item"), "area": rng.choice(area)}}
        if pick == 8:
            return {"actor": actor, "op": "reject", "args": {"asset": rng.choice(assets), "from": rng.choice(parties)}}
        return {"actor": actor, "op": "register"}


def random_scenario(seed: int, **kw) -> Scenario:
    return ScenarioGenerator(seed, **kw).generate()
