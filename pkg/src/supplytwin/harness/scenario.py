"""Scenario files: schema, semantic validation and name-to-id resolution.

A scenario names its parties, categories and physical items, then lists the
steps each party takes. Names are turned into asset ids once, from the
scenario seed, so both worlds see exactly the same ids.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator

from ..domain import IdRegistry, Kind, Role
from ..errors import ScenarioError
from ..goods import FEATURE_DIM, CategoryTruth, Counterfeit, GoodsWorld
from ..real.machines import ISSUER, REGISTRAR

HONEST_OPS = {
    "register", "request_device", "init_device", "withdraw_device", "handover_device",
    "produce", "create", "transform", "train", "audit", "merge", "split",
    "handover", "receive", "reject", "update", "read",
}
ATTACK_OPS = {"forge_credential", "forge_signature", "submit_raw", "replay", "stash_audit", "submit_stash"}
ISSUER_OPS = {"init_device", "withdraw_device"}

# Required (and optional, suffixed "?") step arguments with their name kind.
# Kinds: asset kinds, "party", "phys" (a physical item), "cmd" (nested command),
# "str" and "int".
STEP_ARGS: dict[str, dict[str, Any]] = {
    "register": {},
    "request_device": {},
    "init_device": {},
    "withdraw_device": {"owner": "party"},
    "handover_device": {"to": "party"},
    "produce": {"area": Kind.AREA, "category": Kind.CATEGORY},
    "create": {"item": Kind.ELEMENT, "area": Kind.AREA, "category?": Kind.CATEGORY},
    "transform": {"item": Kind.ELEMENT, "inputs": [Kind.ELEMENT], "category": Kind.CATEGORY},
    "train": {"category": Kind.CATEGORY, "samples": ["phys"]},
    "audit": {"item": Kind.ELEMENT, "category": Kind.CATEGORY, "physical?": "phys"},
    "merge": {"batch": Kind.BATCH, "products": [Kind.ELEMENT]},
    "split": {"batch": Kind.BATCH},
    "handover": {"asset": Kind.ELEMENT, "to": "party"},
    "receive": {"asset": Kind.ELEMENT, "from": "party"},
    "reject": {"asset": Kind.ELEMENT, "from": "party"},
    "update": {"asset": Kind.ELEMENT, "newstate": "str", "proof?": "str"},
    "read": {"asset": Kind.ELEMENT},
    "forge_credential": {"role": "str", "command": "cmd"},
    "forge_signature": {"victim": "party", "command": "cmd"},
    "submit_raw": {"command": "cmd"},
    "replay": {"index": "int"},
    "stash_audit": {"item": Kind.ELEMENT, "category": Kind.CATEGORY, "physical?": "phys"},
    "submit_stash": {},
}

# Kinds of id-valued arguments inside raw transaction commands.
COMMAND_ARG_KINDS: dict[str, Kind] = {
    "area": Kind.AREA, "category": Kind.CATEGORY, "item": Kind.ELEMENT, "batch": Kind.BATCH,
    "asset": Kind.ELEMENT, "inputs": Kind.ELEMENT, "products": Kind.ELEMENT,
}

_NAME = {"type": "string", "minLength": 1}
_VECTOR = {"anyOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"},
                                           "minItems": FEATURE_DIM, "maxItems": FEATURE_DIM}]}

SCENARIO_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "supplytwin scenario",
    "type": "object",
    "required": ["seed", "parties", "steps"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "seed": {"type": "integer"},
        "corrupted": {"type": "array", "items": _NAME, "uniqueItems": True},
        "parties": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "role"],
                "additionalProperties": False,
                "properties": {"id": _NAME, "role": {"enum": [r.value for r in Role if r is not Role.REGISTRAR]}},
            },
        },
        "categories": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "additionalProperties": False,
                "properties": {"name": _NAME, "mean": _VECTOR, "tolerance": _VECTOR, "drift_rate": _VECTOR},
            },
        },
        "items": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "additionalProperties": False,
                "properties": {
                    "name": _NAME,
                    "category": _NAME,
                    "born_at": {"type": "integer", "minimum": 0},
                    "features": _VECTOR,
                    "counterfeit": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"of": _NAME, "offset": {"type": "number"}, "features": _VECTOR},
                    },
                },
            },
        },
        "steps": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["actor", "op"],
                "additionalProperties": False,
                "properties": {
                    "actor": _NAME,
                    "op": {"enum": sorted(HONEST_OPS | ATTACK_OPS)},
                    "args": {"type": "object"},
                },
            },
        },
    },
}
_VALIDATOR = Draft202012Validator(SCENARIO_SCHEMA)


@dataclass(frozen=True)
class Step:
    actor: str
    op: str
    args: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"actor": self.actor, "op": self.op, "args": self.args}


@dataclass
class Scenario:
    seed: int
    parties: dict[str, Role]
    corrupted: frozenset[str]
    categories: list[dict]
    items: list[dict]
    steps: list[Step]
    name: str = ""
    description: str = ""

    # -- construction -------------------------------------------------------
    @classmethod
    def from_json(cls, doc: Any) -> "Scenario":
        errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.path))
        if errors:
            first = errors[0]
            where = "/".join(str(p) for p in first.path) or "<root>"
            raise ScenarioError(f"{where}: {first.message}")
        parties: dict[str, Role] = {}
        for p in doc["parties"]:
            if p["id"] in parties or p["id"] == REGISTRAR:
                raise ScenarioError(f"party id {p['id']!r} is duplicated or reserved")
            role = Role(p["role"])
            if (role is Role.DEVICE_ISSUER) != (p["id"] == ISSUER):
                raise ScenarioError(f"only party {ISSUER!r} may and must hold role D")
            parties[p["id"]] = role
        parties.setdefault(ISSUER, Role.DEVICE_ISSUER)
        corrupted = frozenset(doc.get("corrupted", []))
        for pid in corrupted:
            if pid not in parties or pid == ISSUER:
                raise ScenarioError(f"cannot corrupt {pid!r}")
        scenario = cls(
            seed=doc["seed"],
            parties=parties,
            corrupted=corrupted,
            categories=list(doc.get("categories", [])),
            items=list(doc.get("items", [])),
            steps=[Step(s["actor"], s["op"], dict(s.get("args", {}))) for s in doc["steps"]],
            name=doc.get("name", ""),
            description=doc.get("description", ""),
        )
        scenario._check_semantics()
        return scenario

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read {path}: {exc}") from None
        return cls.from_json(doc)

    def to_json(self) -> dict:
        doc: dict = {"seed": self.seed}
        if self.name:
            doc["name"] = self.name
        if self.description:
            doc["description"] = self.description
        doc["corrupted"] = sorted(self.corrupted)
        doc["parties"] = [{"id": pid, "role": role.value} for pid, role in self.parties.items()]
        doc["categories"] = self.categories
        doc["items"] = self.items
        doc["steps"] = [s.to_json() for s in self.steps]
        return doc

    def without_steps(self, indices: set[int]) -> "Scenario":
        """Copy with the given 0-based step indices removed."""
        kept = [s for i, s in enumerate(self.steps) if i not in indices]
        return Scenario(self.seed, dict(self.parties), self.corrupted, self.categories, self.items,
                        kept, self.name, self.description)

    # -- validation ---------------------------------------------------------
    def _check_semantics(self) -> None:
        names: set[str] = set()
        categories = set()
        for c in self.categories:
            if c["name"] in names:
                raise ScenarioError(f"duplicate name {c['name']!r}")
            names.add(c["name"])
            categories.add(c["name"])
        physical = set()
        for it in self.items:
            if it["name"] in names:
                raise ScenarioError(f"duplicate name {it['name']!r}")
            names.add(it["name"])
            physical.add(it["name"])
            fake = it.get("counterfeit")
            if fake is not None:
                if "features" not in fake and fake.get("of") not in categories:
                    raise ScenarioError(f"counterfeit {it['name']!r} needs features or a known 'of' category")
            elif it.get("category") not in categories:
                raise ScenarioError(f"item {it['name']!r} needs a declared category")
        for n, step in enumerate(self.steps, start=1):
            where = f"step {n} ({step.op})"
            if step.actor not in self.parties:
                raise ScenarioError(f"{where}: unknown actor {step.actor!r}")
            if step.op in ATTACK_OPS and step.actor not in self.corrupted:
                raise ScenarioError(f"{where}: only corrupted parties may run attack ops")
            if step.op in ISSUER_OPS and step.actor != ISSUER:
                raise ScenarioError(f"{where}: only the device issuer may run this op")
            self._check_args(where, STEP_ARGS[step.op], step.args, physical)

    def _check_args(self, where: str, arg_kinds: dict, args: dict, physical: set[str]) -> None:
        allowed = {k.rstrip("?") for k in arg_kinds}
        extra = set(args) - allowed
        if extra:
            raise ScenarioError(f"{where}: unexpected arguments {sorted(extra)}")
        for key, kind in arg_kinds.items():
            optional = key.endswith("?")
            key = key.rstrip("?")
            if key not in args:
                if optional:
                    continue
                raise ScenarioError(f"{where}: missing argument {key!r}")
            value = args[key]
            if isinstance(kind, list):
                if (not isinstance(value, list) or not value or len(set(map(str, value))) != len(value)
                        or not all(isinstance(v, str) for v in value)):
                    raise ScenarioError(f"{where}: {key!r} must be a non-empty list of distinct names")
                if kind[0] == "phys" and not set(value) <= physical:
                    raise ScenarioError(f"{where}: unknown physical items in {key!r}")
            elif kind == "party":
                if value not in self.parties:
                    raise ScenarioError(f"{where}: unknown party {value!r}")
            elif kind == "phys":
                if value not in physical:
                    raise ScenarioError(f"{where}: unknown physical item {value!r}")
            elif kind == "int":
                if not isinstance(value, int):
                    raise ScenarioError(f"{where}: {key!r} must be an integer")
            elif kind == "cmd":
                if not (isinstance(value, dict) and isinstance(value.get("op"), str)
                        and isinstance(value.get("args"), dict)):
                    raise ScenarioError(f"{where}: {key!r} must be an object with op and args")
            elif kind == "str":
                if not isinstance(value, (str, type(None))):
                    raise ScenarioError(f"{where}: {key!r} must be a string")
            elif not isinstance(value, str) and not (optional and value is None):
                raise ScenarioError(f"{where}: {key!r} must be a name")


def sub_rng(seed: int, label: str) -> random.Random:
    """Independent deterministic stream per purpose."""
    return random.Random(f"{seed}:{label}")


class NameTable:
    """Maps scenario names to asset ids; the first kind a name is used with wins."""

    def __init__(self, seed: int, registry: IdRegistry):
        self._rng = sub_rng(seed, "names")
        self._registry = registry
        self.ids: dict[str, str] = {}

    def id(self, name: str, kind: Kind) -> str:
        if name not in self.ids:
            self.ids[name] = self._registry.mint(kind, self._rng)
        return self.ids[name]

    def names(self) -> dict[str, str]:
        return {v: k for k, v in self.ids.items()}


def _mint_command(table: NameTable, command: dict) -> None:
    for key, value in command.get("args", {}).items():
        kind = COMMAND_ARG_KINDS.get(key)
        if kind is None:
            continue
        if isinstance(value, str):
            table.id(value, kind)
        elif isinstance(value, list):
            for v in value:
                if isinstance(v, str):
                    table.id(v, kind)


def build_names(scenario: Scenario, registry: IdRegistry) -> NameTable:
    """Mint every name in document order so both worlds agree on ids."""
    table = NameTable(scenario.seed, registry)
    for c in scenario.categories:
        table.id(c["name"], Kind.CATEGORY)
    for it in scenario.items:
        table.id(it["name"], Kind.ELEMENT)
    for step in scenario.steps:
        for key, kind in STEP_ARGS[step.op].items():
            key = key.rstrip("?")
            value = step.args.get(key)
            if value is None:
                continue
            if isinstance(kind, Kind):
                table.id(value, kind)
            elif isinstance(kind, list) and isinstance(kind[0], Kind):
                for v in value:
                    table.id(v, kind[0])
            elif kind == "cmd":
                _mint_command(table, value)
    return table


def resolve_command(table: NameTable, command: dict) -> tuple[str, dict]:
    """Raw command with names swapped for ids; device refs stay symbolic."""
    args = {}
    for key, value in command["args"].items():
        kind = COMMAND_ARG_KINDS.get(key)
        if kind is not None and isinstance(value, str):
            args[key] = table.ids[value]
        elif kind is not None and isinstance(value, list):
            args[key] = [table.ids[v] if isinstance(v, str) else v for v in value]
        elif key == "fp" and isinstance(value, dict) and value.get("category") in table.ids:
            args[key] = {**value, "category": table.ids[value["category"]]}
        else:
            args[key] = value
    return command["op"], args


def build_goods(scenario: Scenario, table: NameTable) -> GoodsWorld:
    rng = sub_rng(scenario.seed, "goods")
    goods = GoodsWorld()
    truths: dict[str, CategoryTruth] = {}
    for c in scenario.categories:
        mean = c.get("mean")
        if mean is None:
            mean = [round(rng.uniform(0.0, 10.0), 6) for _ in range(FEATURE_DIM)]
        truth = CategoryTruth.build(table.ids[c["name"]], mean, c.get("tolerance", 1.0), c.get("drift_rate", 0.0))
        truths[c["name"]] = truth
        goods.add_category(truth)
    for it in scenario.items:
        item_id = table.ids[it["name"]]
        born = it.get("born_at", 0)
        fake = it.get("counterfeit")
        if fake is not None:
            if "features" in fake:
                source = Counterfeit(CategoryTruth.build("x", fake["features"]).mean)
            else:
                source = Counterfeit.offset_from(truths[fake["of"]], fake.get("offset", 3.0))
            goods.spawn(item_id, source, rng, born)
        else:
            truth = truths[it["category"]]
            physical = goods.spawn(item_id, truth, rng, born)
            if "features" in it:
                physical.features = CategoryTruth.build("x", it["features"]).mean
    return goods


SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def shipped(name: str) -> Path:
    """Path of a scenario bundled with the package."""
    return SCENARIO_DIR / f"{name}.json"


def shipped_names() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))
