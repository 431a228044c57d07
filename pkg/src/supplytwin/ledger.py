"""Transactions, credentials and the append-only ledger functionality."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from jsonschema import Draft202012Validator

from .domain import canonical_bytes, canonical_json
from .errors import LedgerRejected, Reason

_ID = {"type": "string", "pattern": "^[ECBAD][0-9a-f]{32}$"}
_PARTY = {"type": "string", "minLength": 1}
_HEX = {"type": "string", "pattern": "^([0-9a-f]{2})*$"}
_IDS = {"type": "array", "items": _ID, "minItems": 1, "uniqueItems": True}
_VECTOR = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_FP = {
    "type": "object",
    "required": ["category", "est_mean", "est_tolerance", "trained_at", "trained_by"],
    "properties": {
        "category": _ID,
        "est_mean": _VECTOR,
        "est_tolerance": _VECTOR,
        "trained_at": {"type": "integer"},
        "trained_by": _PARTY,
    },
    "additionalProperties": False,
}
_AUDIT = {
    "type": "object",
    "required": ["device", "result", "item", "category", "measured", "t"],
    "properties": {
        "device": _ID,
        "result": {"enum": ["pass", "fail"]},
        "item": _ID,
        "category": _ID,
        "measured": _VECTOR,
        "t": {"type": "integer"},
    },
    "additionalProperties": False,
}


def _args(required: dict, optional: dict | None = None) -> dict:
    props = dict(required)
    props.update(optional or {})
    return {"type": "object", "required": list(required), "properties": props, "additionalProperties": False}


ARG_SCHEMAS: dict[str, dict] = {
    "enroll": _args({"party": _PARTY, "pk": _HEX, "attrs": {"type": "object"}, "reg_sig": _HEX}),
    "produce": _args({"area": _ID, "category": _ID}),
    "create": _args({"item": _ID, "area": _ID, "category": {"anyOf": [_ID, {"type": "null"}]}}),
    "transform": _args({"item": _ID, "inputs": _IDS, "category": _ID}),
    "training": _args({"category": _ID, "fp": _FP}),
    "audit": _args({"item": _ID, "category": _ID, "audit": _AUDIT}),
    "merge": _args({"batch": _ID, "products": _IDS}),
    "split": _args({"batch": _ID}),
    "handover": _args({"asset": _ID, "from": _PARTY, "to": _PARTY}),
    "received": _args({"asset": _ID, "by": _PARTY, "from": _PARTY}),
    "rejected": _args({"asset": _ID, "by": _PARTY, "from": _PARTY}),
    "update": _args({"asset": _ID, "newstate": {"type": "string"}}, {"proof": {"type": ["string", "null"]}}),
    "create_FF": _args({"device": _ID, "issuer": _PARTY}),
    "handover_FF": _args({"device": _ID, "from": _PARTY, "to": _PARTY}),
    "deleteDevice": _args({"device": _ID, "issuer": _PARTY}),
}
DEVICE_OPS = frozenset({"create_FF", "handover_FF", "deleteDevice"})

_PAYLOAD = Draft202012Validator(
    {
        "type": "object",
        "required": ["op", "args", "nonce"],
        "properties": {
            "op": {"enum": sorted(ARG_SCHEMAS)},
            "args": {"type": "object"},
            "nonce": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    }
)
_ARG_VALIDATORS = {op: Draft202012Validator(schema) for op, schema in ARG_SCHEMAS.items()}
_CRED = Draft202012Validator(
    {
        "type": "object",
        "required": ["party", "pk", "attrs", "reg_sig"],
        "properties": {"party": _PARTY, "pk": _HEX, "attrs": {"type": "object"}, "reg_sig": _HEX},
        "additionalProperties": False,
    }
)


def payload_is_well_formed(payload: object) -> bool:
    if not _PAYLOAD.is_valid(payload):
        return False
    return _ARG_VALIDATORS[payload["op"]].is_valid(payload["args"])  # type: ignore[index]


@dataclass(frozen=True)
class Credential:
    """Registrar-signed binding of a party id to a public key and attributes."""

    party: str
    pk: str
    attrs: dict
    reg_sig: str

    def binding(self) -> bytes:
        return credential_binding(self.party, self.pk, self.attrs)

    @property
    def role(self) -> str | None:
        return self.attrs.get("role")

    def to_json(self) -> dict:
        return {"party": self.party, "pk": self.pk, "attrs": dict(self.attrs), "reg_sig": self.reg_sig}

    @classmethod
    def from_json(cls, doc: dict) -> "Credential":
        return cls(doc["party"], doc["pk"], dict(doc["attrs"]), doc["reg_sig"])


def credential_binding(party: str, pk_hex: str, attrs: dict) -> bytes:
    """Message the registrar signs when it certifies a key."""
    return canonical_bytes({"party": party, "pk": pk_hex, "attrs": attrs})


@dataclass(frozen=True)
class Transaction:
    payload: dict
    sig: str
    cred: dict

    @property
    def op(self) -> str | None:
        return self.payload.get("op") if isinstance(self.payload, dict) else None

    @property
    def args(self) -> dict:
        args = self.payload.get("args") if isinstance(self.payload, dict) else None
        return args if isinstance(args, dict) else {}

    def signed_bytes(self) -> bytes:
        return canonical_bytes(self.payload)

    def digest(self) -> str:
        """Replay key: hash of the payload alone, so re-signing does not evade it."""
        return hashlib.sha256(self.signed_bytes()).hexdigest()

    def credential(self) -> Credential | None:
        return Credential.from_json(self.cred) if _CRED.is_valid(self.cred) else None

    def well_formed(self) -> bool:
        return payload_is_well_formed(self.payload) and _CRED.is_valid(self.cred) and _is_hex(self.sig)

    def to_json(self) -> dict:
        doc = dict(self.payload) if isinstance(self.payload, dict) else {"payload": self.payload}
        doc["sig"] = self.sig
        doc["cred"] = self.cred
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Transaction":
        payload = {k: v for k, v in doc.items() if k not in ("sig", "cred")}
        return cls(payload, doc.get("sig", ""), doc.get("cred", {}))


def _is_hex(value: object) -> bool:
    if not isinstance(value, str) or len(value) % 2:
        return False
    try:
        bytes.fromhex(value)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class Receipt:
    index: int
    sender: str
    digest: str


AppendHook = Callable[[int, Transaction, str], None]
LeakHook = Callable[[dict], None]


class _Storage:
    """Shared read/leak plumbing for the ledger and its bare-list hybrid."""

    def __init__(self, corrupted: Iterable[str] = (), on_append: AppendHook | None = None,
                 on_leak: LeakHook | None = None):
        self.entries: list[Transaction] = []
        self.corrupted = set(corrupted)
        self.genesis: dict | None = None
        self._append_hooks: list[AppendHook] = [on_append] if on_append else []
        self._on_leak = on_leak or (lambda event: None)

    def subscribe(self, hook: AppendHook) -> None:
        self._append_hooks.append(hook)

    def set_genesis(self, genesis: dict) -> None:
        self.genesis = genesis

    def __len__(self) -> int:
        return len(self.entries)

    def read(self, reader: str) -> list[Transaction]:
        snapshot = list(self.entries)
        if reader in self.corrupted:
            self._on_leak({"ev": "ledger_read", "party": reader, "length": len(snapshot)})
        return snapshot

    def _append(self, tx: Transaction, sender: str) -> Receipt:
        self.entries.append(tx)
        index = len(self.entries) - 1
        if sender in self.corrupted:
            self._on_leak({"ev": "receipt", "party": sender, "index": index})
        for hook in list(self._append_hooks):
            hook(index, tx, sender)
        return Receipt(index, sender, tx.digest())


class Ledger(_Storage):
    """Append-only ledger with format validation, replay protection and JSON-lines persistence."""

    def __init__(self, path: str | Path | None = None, **kwargs):
        super().__init__(**kwargs)
        self.path = Path(path) if path is not None else None
        self._seen: set[str] = set()
        if self.path is not None:
            self.path.write_text("")

    def set_genesis(self, genesis: dict) -> None:
        super().set_genesis(genesis)
        if self.path is not None:
            with self.path.open("a") as fh:
                fh.write(canonical_json({"genesis": genesis}) + "\n")

    def validate(self, tx: Transaction) -> bool:
        return self._check(tx) is None

    def _check(self, tx: Transaction) -> Reason | None:
        if not tx.well_formed():
            return Reason.MALFORMED
        if tx.digest() in self._seen:
            return Reason.DUPLICATE
        return None

    def submit(self, tx: Transaction, sender: str) -> Receipt:
        reason = self._check(tx)
        if reason is not None:
            raise LedgerRejected(reason, f"from {sender}")
        self._seen.add(tx.digest())
        if self.path is not None:
            with self.path.open("a") as fh:
                fh.write(canonical_json(tx.to_json()) + "\n")
        return self._append(tx, sender)

    @classmethod
    def replay(cls, path: str | Path) -> "Ledger":
        """Rebuild a ledger from its file; every line must validate again."""
        ledger = cls()
        lines = Path(path).read_text().splitlines()
        if lines:
            head = json.loads(lines[0])
            if "genesis" in head:
                ledger.genesis = head["genesis"]
                lines = lines[1:]
        for line in lines:
            tx = Transaction.from_json(json.loads(line))
            reason = ledger._check(tx)
            if reason is not None:
                raise LedgerRejected(reason, "while replaying")
            ledger._seen.add(tx.digest())
            ledger.entries.append(tx)
        return ledger


class InternalList(Ledger):
    """In-memory list with the ledger's acceptance rules and no file behind it."""

    def __init__(self, **kwargs):
        super().__init__(None, **kwargs)
