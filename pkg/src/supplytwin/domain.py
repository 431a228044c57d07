"""Core vocabulary: asset ids, roles, lifecycle states, events and records."""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

from .errors import Reason, SupplyTwinError, TransitionError

SUFFIX_HEX = 32
MAX_MINT_ATTEMPTS = 8
ASSET_ID_RE = re.compile(r"^[ECBAD][0-9a-f]{%d}$" % SUFFIX_HEX)


def canonical_json(obj: Any) -> str:
    """Deterministic JSON text used for signing, hashing and trace comparison."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def canonical_bytes(obj: Any) -> bytes:
    return canonical_json(obj).encode("ascii")


class Kind(str, Enum):
    ELEMENT = "E"
    CATEGORY = "C"
    BATCH = "B"
    AREA = "A"
    DEVICE = "D"


def is_asset_id(value: Any) -> bool:
    return isinstance(value, str) and ASSET_ID_RE.match(value) is not None


def kind_of(asset_id: str) -> Kind | None:
    """Kind tag of an id, or None when the string is not a well-formed id."""
    return Kind(asset_id[0]) if is_asset_id(asset_id) else None


class IdRegistry:
    """Tracks minted ids so a world never hands out the same id twice."""

    def __init__(self) -> None:
        self._issued: set[str] = set()

    def __contains__(self, asset_id: str) -> bool:
        return asset_id in self._issued

    def __len__(self) -> int:
        return len(self._issued)

    def mint(self, kind: Kind, rng: random.Random) -> str:
        return mint_asset_id(kind, rng, self)

    def reserve(self, asset_id: str) -> None:
        self._issued.add(asset_id)


def mint_asset_id(kind: Kind, rng: random.Random, registry: IdRegistry) -> str:
    for _ in range(MAX_MINT_ATTEMPTS):
        candidate = f"{Kind(kind).value}{rng.getrandbits(4 * SUFFIX_HEX):0{SUFFIX_HEX}x}"
        if candidate not in registry:
            registry.reserve(candidate)
            return candidate
    raise SupplyTwinError(Reason.COLLISION_EXHAUSTED, f"{MAX_MINT_ATTEMPTS} collisions in a row")


class Role(str, Enum):
    PRODUCER = "F"
    MANUFACTURER = "M"
    CERTIFIER = "C"
    DEVICE_ISSUER = "D"
    OTHER = "O"
    CONSUMER = "Consumer"
    REGISTRAR = "Registrar"


MEMBER_ROLES = frozenset({Role.PRODUCER, Role.MANUFACTURER, Role.CERTIFIER, Role.OTHER})
CREATOR_ROLES = frozenset({Role.PRODUCER, Role.MANUFACTURER})

# Which roles may issue each supply-chain command.
ROLE_GATE: dict[str, frozenset[Role]] = {
    "produce": CREATOR_ROLES,
    "create": CREATOR_ROLES,
    "transform": frozenset({Role.MANUFACTURER}),
    "training": CREATOR_ROLES,
    "audit": MEMBER_ROLES,
    "merge": MEMBER_ROLES,
    "split": MEMBER_ROLES,
    "handover": MEMBER_ROLES,
    "receive": MEMBER_ROLES,
    "reject": MEMBER_ROLES,
    "update": MEMBER_ROLES,
}


class StateKind(str, Enum):
    INTACT = "intact"
    PACKAGED = "packaged"
    TRANS = "trans"
    DESTROYED = "destroyed"


@dataclass(frozen=True)
class AssetState:
    kind: StateKind
    designee: str | None = None

    def __post_init__(self) -> None:
        if (self.kind is StateKind.TRANS) != (self.designee is not None):
            raise ValueError("designee is required exactly for the trans state")

    def to_json(self) -> str:
        if self.kind is StateKind.TRANS:
            return f"trans:{self.designee}"
        return self.kind.value

    @classmethod
    def from_json(cls, text: str) -> "AssetState":
        if text.startswith("trans:"):
            return cls(StateKind.TRANS, text[len("trans:"):])
        return cls(StateKind(text))

    @classmethod
    def trans(cls, designee: str) -> "AssetState":
        return cls(StateKind.TRANS, designee)


INTACT = AssetState(StateKind.INTACT)
PACKAGED = AssetState(StateKind.PACKAGED)
DESTROYED = AssetState(StateKind.DESTROYED)


class EventKind(str, Enum):
    PRODUCING = "producing"
    CREATION = "creation"
    TRANSFORMATION = "transformation"
    TRAINING = "training"
    AUDIT = "audit"
    AGGREGATION = "aggregation"
    DISAGGREGATION = "disaggregation"
    HANDOVER_STARTED = "handoverStarted"
    HANDOVER_ENDED = "handoverEnded"
    HANDOVER_FAILED = "handoverFailed"
    UPDATE = "update"
    DEVICE_CREATED = "deviceCreated"
    DEVICE_DELETED = "deviceDeleted"


# (state kind, event) -> successor kind; TRANS successors take the designee.
TRANSITIONS: dict[tuple[StateKind, EventKind], StateKind] = {
    (StateKind.INTACT, EventKind.TRANSFORMATION): StateKind.DESTROYED,
    (StateKind.INTACT, EventKind.AGGREGATION): StateKind.PACKAGED,
    (StateKind.PACKAGED, EventKind.DISAGGREGATION): StateKind.INTACT,
    (StateKind.INTACT, EventKind.DISAGGREGATION): StateKind.DESTROYED,
    (StateKind.INTACT, EventKind.HANDOVER_STARTED): StateKind.TRANS,
    (StateKind.TRANS, EventKind.HANDOVER_ENDED): StateKind.INTACT,
    (StateKind.TRANS, EventKind.HANDOVER_FAILED): StateKind.INTACT,
    (StateKind.INTACT, EventKind.UPDATE): StateKind.DESTROYED,
    (StateKind.PACKAGED, EventKind.UPDATE): StateKind.DESTROYED,
}


def transition(
    current: AssetState,
    event: EventKind,
    actor_is_owner: bool = True,
    designee: str | None = None,
) -> AssetState:
    """Successor state for ``event``; raises TransitionError when not allowed."""
    if not actor_is_owner:
        raise TransitionError(Reason.NOT_OWNER, f"{event.value} by non-owner")
    nxt = TRANSITIONS.get((current.kind, event))
    if nxt is None:
        raise TransitionError(Reason.ILLEGAL_TRANSITION, f"{current.to_json()} + {event.value}")
    if nxt is StateKind.TRANS:
        if designee is None:
            raise ValueError("handover start needs a designee")
        return AssetState.trans(designee)
    return AssetState(nxt)


@dataclass(frozen=True)
class AssetRecord:
    owner: str
    asset: str
    event: EventKind
    t: int
    state: AssetState
    payload: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "owner": self.owner,
            "asset": self.asset,
            "event": self.event.value,
            "t": self.t,
            "state": self.state.to_json(),
            "payload": self.payload,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AssetRecord":
        return cls(
            owner=doc["owner"],
            asset=doc["asset"],
            event=EventKind(doc["event"]),
            t=int(doc["t"]),
            state=AssetState.from_json(doc["state"]),
            payload=dict(doc.get("payload", {})),
        )


REFERENCE_KEYS = ("area", "category", "batch", "into")
REFERENCE_LIST_KEYS = ("inputs", "products")


def references(record: AssetRecord) -> set[str]:
    """Asset ids a record speaks about: its subject plus ids named in the payload."""
    refs = {record.asset}
    for key in REFERENCE_KEYS:
        value = record.payload.get(key)
        if isinstance(value, str):
            refs.add(value)
    for key in REFERENCE_LIST_KEYS:
        refs.update(v for v in record.payload.get(key, ()) if isinstance(v, str))
    return refs


def records_for(records: Iterable[AssetRecord], asset: str) -> list[AssetRecord]:
    """History of one asset in ledger order, including records that reference it."""
    return [r for r in records if asset in references(r)]
