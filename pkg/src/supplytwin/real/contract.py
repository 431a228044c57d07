"""Supply-chain smart contract.

Every node folds the ledger through this contract. A transaction is accepted
when its credential and signature verify and the command is legal in the
current state. Checks run in a fixed order: format, credential, signature,
role, existence and ownership, asset kind, freshness and lifecycle state,
device validity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from ..domain import (
    MEMBER_ROLES,
    ROLE_GATE,
    AssetRecord,
    AssetState,
    EventKind,
    Kind,
    Role,
    StateKind,
    TRANSITIONS,
    kind_of,
    records_for,
)
from ..errors import Reason
from ..ledger import DEVICE_OPS, Credential, Transaction, payload_is_well_formed
from ..scanner import ACTIVE, WITHDRAWN, FingerprintScanner
from ..sig import SignatureFunctionality

# Label a refused transaction carries in its ``bot`` output.
BOT_LABEL = {
    "enroll": "register",
    "received": "receive",
    "rejected": "reject",
}


def bot_label(op: str | None) -> str:
    return BOT_LABEL.get(op, op) if isinstance(op, str) else "?"


@dataclass(frozen=True)
class Genesis:
    registrar: str
    pk: str
    policy_version: int = 1
    params: dict = field(default_factory=lambda: {"feature_dim": 8, "lambda": 128})

    def to_json(self) -> dict:
        return {"registrar": self.registrar, "pk": self.pk,
                "policy_version": self.policy_version, "params": dict(self.params)}

    @classmethod
    def from_json(cls, doc: dict) -> "Genesis":
        return cls(doc["registrar"], doc["pk"], int(doc["policy_version"]), dict(doc["params"]))


@dataclass
class DeviceEntry:
    owner: str
    status: str
    issuer: str


@dataclass
class ContractState:
    members: dict[str, str] = field(default_factory=dict)
    records: list[AssetRecord] = field(default_factory=list)
    owners: dict[str, str] = field(default_factory=dict)
    states: dict[str, AssetState] = field(default_factory=dict)
    batch_contents: dict[str, list[str]] = field(default_factory=dict)
    area_links: dict[str, str] = field(default_factory=dict)
    trainers: dict[str, str] = field(default_factory=dict)
    clock: int = 0
    devices: dict[str, DeviceEntry] = field(default_factory=dict)
    device_history: list[AssetRecord] = field(default_factory=list)


@dataclass
class Outcome:
    accepted: bool
    op: str | None
    reason: Reason | None = None
    notices: list[tuple[list[str], list]] = field(default_factory=list)
    records: list[AssetRecord] = field(default_factory=list)


_INTACT = AssetState(StateKind.INTACT)
_PACKAGED = AssetState(StateKind.PACKAGED)
_DESTROYED = AssetState(StateKind.DESTROYED)


def _allowed(state: AssetState, event: EventKind) -> bool:
    return (state.kind, event) in TRANSITIONS


class SupplyChainContract:
    def __init__(self, genesis: Genesis, sig: SignatureFunctionality, scanner: FingerprintScanner):
        self.genesis = genesis
        self.sig = sig
        self.scanner = scanner
        self.state = ContractState()

    # -- authentication -----------------------------------------------------
    def authenticate(self, tx: Transaction) -> Reason | None:
        return authenticate(tx, self.genesis, self.sig)

    # -- pure checks --------------------------------------------------------
    def check(self, payload: dict, cred: Credential) -> Reason | None:
        """Legality of a command for an authenticated signer, without side effects."""
        if not payload_is_well_formed(payload):
            return Reason.MALFORMED
        op, args, signer = payload["op"], payload["args"], cred.party
        if op == "enroll":
            return Reason.ALREADY_REGISTERED if args["party"] in self.state.members else None
        try:
            role = Role(cred.role)
        except ValueError:
            return Reason.WRONG_ROLE
        if op in DEVICE_OPS:
            return self._check_device(op, args, signer, role)
        if op == "handover" and args["from"] != signer:
            return Reason.MALFORMED
        if op in ("received", "rejected") and args["by"] != signer:
            return Reason.MALFORMED
        if role not in ROLE_GATE[bot_label(op)]:
            return Reason.WRONG_ROLE
        return getattr(self, f"_check_{op}")(signer, args)

    def _state(self, asset: str) -> AssetState | None:
        return self.state.states.get(asset)

    def _ownership(self, signer: str, assets: Iterable[str]) -> Reason | None:
        for asset in assets:
            if asset not in self.state.states:
                return Reason.UNKNOWN_ASSET
            if self.state.owners.get(asset) != signer:
                return Reason.NOT_OWNER
        return None

    def _check_produce(self, signer: str, a: dict) -> Reason | None:
        if kind_of(a["area"]) is not Kind.AREA or kind_of(a["category"]) is not Kind.CATEGORY:
            return Reason.WRONG_ASSET_KIND
        if a["area"] in self.state.states:
            return Reason.DUPLICATE_AREA
        return None

    def _check_create(self, signer: str, a: dict) -> Reason | None:
        area = a["area"]
        if area not in self.state.states:
            return Reason.UNKNOWN_ASSET
        if self.state.owners.get(area) != signer:
            return Reason.NOT_AREA_OWNER
        if (kind_of(a["item"]) is not Kind.ELEMENT or kind_of(area) is not Kind.AREA
                or (a["category"] is not None and kind_of(a["category"]) is not Kind.CATEGORY)):
            return Reason.WRONG_ASSET_KIND
        if a["item"] in self.state.states:
            return Reason.DUPLICATE_ITEM
        if self._state(area) != _INTACT:
            return Reason.ILLEGAL_TRANSITION
        return None

    def _check_transform(self, signer: str, a: dict) -> Reason | None:
        reason = self._ownership(signer, a["inputs"])
        if reason:
            return reason
        if (kind_of(a["item"]) is not Kind.ELEMENT or kind_of(a["category"]) is not Kind.CATEGORY
                or any(kind_of(i) is not Kind.ELEMENT for i in a["inputs"])):
            return Reason.WRONG_ASSET_KIND
        if a["item"] in self.state.states:
            return Reason.DUPLICATE_ITEM
        if any(self._state(i) != _INTACT for i in a["inputs"]):
            return Reason.INPUT_NOT_INTACT
        return None

    def _check_training(self, signer: str, a: dict) -> Reason | None:
        if kind_of(a["category"]) is not Kind.CATEGORY:
            return Reason.WRONG_ASSET_KIND
        trainer = self.state.trainers.get(a["category"])
        if trainer is not None and trainer != signer:
            return Reason.NOT_ORIGINAL_TRAINER
        return None

    def _check_audit(self, signer: str, a: dict) -> Reason | None:
        item = a["item"]
        state = self._state(item)
        if state is None:
            return Reason.UNKNOWN_ITEM
        if kind_of(item) not in (Kind.ELEMENT, Kind.BATCH) or kind_of(a["category"]) is not Kind.CATEGORY:
            return Reason.WRONG_ASSET_KIND
        if state == _DESTROYED:
            return Reason.ILLEGAL_TRANSITION
        audit = a["audit"]
        device = self.state.devices.get(audit["device"])
        if (audit["item"] != item or audit["category"] != a["category"]
                or device is None or device.status != ACTIVE
                or self.scanner.issued_to(audit) != signer):
            return Reason.DEVICE_INVALID
        return None

    def _check_merge(self, signer: str, a: dict) -> Reason | None:
        reason = self._ownership(signer, a["products"])
        if reason:
            return reason
        if kind_of(a["batch"]) is not Kind.BATCH or any(
                kind_of(p) not in (Kind.ELEMENT, Kind.BATCH) for p in a["products"]):
            return Reason.WRONG_ASSET_KIND
        if a["batch"] in self.state.states:
            return Reason.DUPLICATE_BATCH
        if not all(_allowed(self.state.states[p], EventKind.AGGREGATION) for p in a["products"]):
            return Reason.NOT_INTACT
        return None

    def _check_split(self, signer: str, a: dict) -> Reason | None:
        reason = self._ownership(signer, [a["batch"]])
        if reason:
            return reason
        if kind_of(a["batch"]) is not Kind.BATCH:
            return Reason.NOT_A_BATCH
        if self._state(a["batch"]) != _INTACT:
            return Reason.BATCH_NOT_INTACT
        return None

    def _check_handover(self, signer: str, a: dict) -> Reason | None:
        reason = self._ownership(signer, [a["asset"]])
        if reason:
            return reason
        if kind_of(a["asset"]) not in (Kind.ELEMENT, Kind.BATCH):
            return Reason.WRONG_ASSET_KIND
        if not _allowed(self.state.states[a["asset"]], EventKind.HANDOVER_STARTED):
            return Reason.NOT_INTACT
        recipient = a["to"]
        if recipient == signer or self.state.members.get(recipient) not in {r.value for r in MEMBER_ROLES}:
            return Reason.RECIPIENT_NOT_AUTHORIZED
        return None

    def _check_pending(self, signer: str, a: dict) -> Reason | None:
        state = self._state(a["asset"])
        if state is None:
            return Reason.UNKNOWN_ASSET
        if state.kind is not StateKind.TRANS:
            return Reason.NOT_IN_TRANSIT
        if state.designee != signer:
            return Reason.NOT_DESIGNEE
        if self.state.owners.get(a["asset"]) != a["from"]:
            return Reason.NOT_IN_TRANSIT
        return None

    _check_received = _check_pending
    _check_rejected = _check_pending

    def _check_update(self, signer: str, a: dict) -> Reason | None:
        reason = self._ownership(signer, [a["asset"]])
        if reason:
            return reason
        if kind_of(a["asset"]) not in (Kind.ELEMENT, Kind.BATCH, Kind.AREA):
            return Reason.WRONG_ASSET_KIND
        if a["newstate"] != StateKind.DESTROYED.value:
            return Reason.ILLEGAL_TRANSITION
        if not _allowed(self.state.states[a["asset"]], EventKind.UPDATE):
            return Reason.ILLEGAL_TRANSITION
        return None

    def _check_device(self, op: str, a: dict, signer: str, role: Role) -> Reason | None:
        return check_device_tx(op, a, signer, role, self.state.devices, self.scanner)

    # -- effects ------------------------------------------------------------
    def _put(self, out: Outcome, owner: str, asset: str, event: EventKind, state: AssetState,
             payload: dict) -> None:
        s = self.state
        s.clock += 1
        record = AssetRecord(owner, asset, event, s.clock, state, payload)
        s.records.append(record)
        s.owners[asset] = owner
        s.states[asset] = state
        out.records.append(record)

    def _effect(self, out: Outcome, signer: str, role: str | None, op: str, a: dict) -> None:
        s = self.state
        if op == "enroll":
            s.members[a["party"]] = a["attrs"].get("role")
        elif op in DEVICE_OPS:
            s.device_history.extend(apply_device_tx(op, a, signer, s.devices, len(s.device_history)))
        elif op == "produce":
            self._put(out, signer, a["area"], EventKind.PRODUCING, _INTACT, {"category": a["category"]})
            out.notices.append(([signer], ["produced", signer, a["area"], a["category"]]))
        elif op == "create":
            self._put(out, signer, a["item"], EventKind.CREATION, _INTACT,
                      {"area": a["area"], "category": a["category"]})
            s.area_links[a["item"]] = a["area"]
            out.notices.append(([signer], ["created", signer, a["item"], a["category"], a["area"]]))
        elif op == "transform":
            for asset in a["inputs"]:
                self._put(out, signer, asset, EventKind.TRANSFORMATION, _DESTROYED, {"into": a["item"]})
            self._put(out, signer, a["item"], EventKind.TRANSFORMATION, _INTACT,
                      {"inputs": list(a["inputs"]), "category": a["category"]})
            out.notices.append(([signer], ["transformed", signer, a["item"], a["category"], list(a["inputs"])]))
        elif op == "training":
            s.trainers.setdefault(a["category"], signer)
            self._put(out, signer, a["category"], EventKind.TRAINING, _INTACT, {"fp": a["fp"]})
            out.notices.append(([signer], ["trained", signer, a["category"], a["fp"]]))
        elif op == "audit":
            item = a["item"]
            self._put(out, s.owners[item], item, EventKind.AUDIT, s.states[item],
                      {"audit": a["audit"], "category": a["category"], "auditor": signer,
                       "certified": role == Role.CERTIFIER.value})
            out.notices.append(([signer], ["audit", signer, item, a["audit"]]))
        elif op == "merge":
            for asset in a["products"]:
                self._put(out, signer, asset, EventKind.AGGREGATION, _PACKAGED, {"batch": a["batch"]})
            self._put(out, signer, a["batch"], EventKind.AGGREGATION, _INTACT, {"products": list(a["products"])})
            s.batch_contents[a["batch"]] = list(a["products"])
            out.notices.append(([signer], ["merged", signer, a["batch"], list(a["products"])]))
        elif op == "split":
            batch = a["batch"]
            members = s.batch_contents.pop(batch, [])
            for asset in members:
                self._put(out, signer, asset, EventKind.DISAGGREGATION, _INTACT, {"batch": batch})
            self._put(out, signer, batch, EventKind.DISAGGREGATION, _DESTROYED, {"products": members})
            out.notices.append(([signer], ["splitted", signer, batch]))
        elif op == "handover":
            self._put(out, signer, a["asset"], EventKind.HANDOVER_STARTED, AssetState.trans(a["to"]),
                      {"to": a["to"]})
            out.notices.append(([signer, a["to"]], ["handover", a["asset"], signer, a["to"]]))
        elif op == "received":
            self._put(out, signer, a["asset"], EventKind.HANDOVER_ENDED, _INTACT, {"from": a["from"]})
            stack = list(s.batch_contents.get(a["asset"], ()))
            while stack:
                member = stack.pop()
                s.owners[member] = signer
                stack.extend(s.batch_contents.get(member, ()))
            out.notices.append(([a["from"], signer], ["received", a["asset"], a["from"], signer]))
        elif op == "rejected":
            self._put(out, a["from"], a["asset"], EventKind.HANDOVER_FAILED, _INTACT, {"by": signer})
            out.notices.append(([a["from"], signer], ["rejected", a["asset"], a["from"], signer]))
        elif op == "update":
            asset = a["asset"]
            if s.states[asset] == _PACKAGED:
                for contents in s.batch_contents.values():
                    if asset in contents:
                        contents.remove(asset)
                        break
            proof = a.get("proof")
            self._put(out, signer, asset, EventKind.UPDATE, _DESTROYED, {"newstate": a["newstate"], "proof": proof})
            out.notices.append(([signer], ["updated", signer, asset, a["newstate"], proof]))

    # -- public entry points ------------------------------------------------
    def apply(self, tx: Transaction) -> Outcome:
        op = tx.op if isinstance(tx.op, str) else None
        if not tx.well_formed():
            return Outcome(False, op, Reason.MALFORMED)
        reason = self.authenticate(tx)
        cred = tx.credential()
        if reason is None:
            reason = self.check(tx.payload, cred)
        if reason is not None:
            return Outcome(False, op, reason)
        out = Outcome(True, op)
        self._effect(out, cred.party, cred.role, op, tx.args)
        return out

    def fold(self, entries: Iterable[Transaction]) -> list[Outcome]:
        return [self.apply(tx) for tx in entries]

    def records_for(self, asset: str) -> list[AssetRecord]:
        return records_for(self.state.records, asset)


def authenticate(tx: Transaction, genesis: Genesis, sig: SignatureFunctionality) -> Reason | None:
    """Credential first, then the transaction signature."""
    cred = tx.credential()
    if cred is None:
        return Reason.BAD_CREDENTIAL
    reg, reg_pk = genesis.registrar, bytes.fromhex(genesis.pk)
    if tx.op == "enroll" and (cred.party != reg or cred.pk != genesis.pk):
        return Reason.BAD_CREDENTIAL
    if not sig.verify(reg, reg_pk, cred.binding(), bytes.fromhex(cred.reg_sig)):
        return Reason.BAD_CREDENTIAL
    if not sig.verify(cred.party, bytes.fromhex(cred.pk), tx.signed_bytes(), bytes.fromhex(tx.sig)):
        return Reason.BAD_SIGNATURE
    return None


def check_device_tx(op: str, a: dict, signer: str, role: Role, devices: dict[str, DeviceEntry],
                    scanner: FingerprintScanner) -> Reason | None:
    """Device transactions must mirror an event the scanner functionality really produced."""
    device = a["device"]
    if op == "handover_FF":
        if a["from"] != signer:
            return Reason.MALFORMED
        entry = devices.get(device)
        if entry is None or entry.status != ACTIVE:
            return Reason.DEVICE_INVALID
        if not scanner.has_event(event="handover", device=device, **{"from": signer, "to": a["to"]}):
            return Reason.DEVICE_INVALID
        return None
    if role is not Role.DEVICE_ISSUER:
        return Reason.WRONG_ROLE
    if a["issuer"] != signer:
        return Reason.MALFORMED
    if op == "create_FF":
        if device in devices or not scanner.has_event(event="init", device=device, issuer=signer):
            return Reason.DEVICE_INVALID
        return None
    entry = devices.get(device)
    if (entry is None or entry.status != ACTIVE or entry.issuer != signer
            or not scanner.has_event(event="withdraw", device=device, issuer=signer)):
        return Reason.DEVICE_INVALID
    return None


def apply_device_tx(op: str, a: dict, signer: str, devices: dict[str, DeviceEntry],
                    seq: int) -> list[AssetRecord]:
    device = a["device"]
    if op == "create_FF":
        devices[device] = DeviceEntry(signer, ACTIVE, signer)
        return [AssetRecord(signer, device, EventKind.DEVICE_CREATED, seq + 1, _INTACT, {})]
    if op == "handover_FF":
        devices[device].owner = a["to"]
        return [AssetRecord(a["to"], device, EventKind.HANDOVER_ENDED, seq + 1, _INTACT, {"from": signer})]
    devices[device].status = WITHDRAWN
    return [AssetRecord(devices[device].owner, device, EventKind.DEVICE_DELETED, seq + 1, _DESTROYED, {})]
