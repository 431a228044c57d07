"""Ideal supply-chain functionality.

A trusted party that keeps the registered members, the asset records and the
ownership and lifecycle state of every asset. Each accepted command appends
records and produces confirmation outputs; each refused command produces a
``bot`` output to the caller only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .domain import (
    DESTROYED,
    INTACT,
    MEMBER_ROLES,
    PACKAGED,
    ROLE_GATE,
    AssetRecord,
    AssetState,
    EventKind,
    Kind,
    Role,
    StateKind,
    kind_of,
    records_for,
    transition,
)
from .errors import Reason, SupplyChainRejected, TransitionError

Deliver = Callable[[str, list], None]
Leak = Callable[[str, str, dict, list], None]
AuditValidator = Callable[[str, dict], bool]


@dataclass
class IdealState:
    registered: dict[str, Role] = field(default_factory=dict)
    records: list[AssetRecord] = field(default_factory=list)
    owners: dict[str, str] = field(default_factory=dict)
    states: dict[str, AssetState] = field(default_factory=dict)
    batch_contents: dict[str, list[str]] = field(default_factory=dict)
    area_links: dict[str, str] = field(default_factory=dict)
    fingerprints: dict[str, tuple[str, dict]] = field(default_factory=dict)
    clock: int = 0


class IdealSupplyChain:
    def __init__(
        self,
        deliver: Deliver | None = None,
        leak: Leak | None = None,
        audit_validator: AuditValidator | None = None,
    ):
        self.state = IdealState()
        self._deliver = deliver or (lambda party, msg: None)
        self._leak = leak or (lambda actor, op, args, msg: None)
        self._audit_ok = audit_validator or (lambda caller, audit: True)

    # -- plumbing -----------------------------------------------------------
    def _reject(self, caller: str, op: str, reason: Reason) -> SupplyChainRejected:
        self._deliver(caller, ["bot", op, reason.value])
        return SupplyChainRejected(reason, f"{op} by {caller}")

    def _confirm(self, recipients: list[str], actor: str, op: str, args: dict, msg: list) -> None:
        for party in recipients:
            self._deliver(party, msg)
        self._leak(actor, op, args, msg)

    def _writer(self, caller: str, op: str) -> None:
        role = self.state.registered.get(caller)
        if role is None:
            raise self._reject(caller, op, Reason.NOT_REGISTERED)
        if role not in ROLE_GATE[op]:
            raise self._reject(caller, op, Reason.WRONG_ROLE)

    def _record(self, owner: str, asset: str, event: EventKind, state: AssetState, payload: dict) -> None:
        s = self.state
        s.clock += 1
        s.records.append(AssetRecord(owner, asset, event, s.clock, state, payload))
        s.owners[asset] = owner
        s.states[asset] = state

    def _known(self, caller: str, op: str, asset: str, missing: Reason = Reason.UNKNOWN_ASSET) -> AssetState:
        state = self.state.states.get(asset)
        if state is None:
            raise self._reject(caller, op, missing)
        return state

    def _owned(self, caller: str, op: str, asset: str) -> AssetState:
        state = self._known(caller, op, asset)
        if self.state.owners.get(asset) != caller:
            raise self._reject(caller, op, Reason.NOT_OWNER)
        return state

    def _kinds(self, caller: str, op: str, pairs: list[tuple[str | None, set[Kind]]]) -> None:
        for asset, allowed in pairs:
            if asset is not None and kind_of(asset) not in allowed:
                raise self._reject(caller, op, Reason.WRONG_ASSET_KIND)

    def _fresh(self, caller: str, op: str, asset: str, reason: Reason) -> None:
        if asset in self.state.states:
            raise self._reject(caller, op, reason)

    def _parent_batch(self, asset: str) -> str | None:
        for batch, contents in self.state.batch_contents.items():
            if asset in contents:
                return batch
        return None

    def _propagate_owner(self, batch: str, owner: str) -> None:
        for member in self.state.batch_contents.get(batch, ()):
            self.state.owners[member] = owner
            self._propagate_owner(member, owner)

    def is_registered(self, party: str) -> bool:
        return party in self.state.registered

    # -- commands -----------------------------------------------------------
    def register(self, caller: str, role: Role) -> None:
        if caller in self.state.registered:
            raise self._reject(caller, "register", Reason.ALREADY_REGISTERED)
        role = Role(role)
        self.state.registered[caller] = role
        self._confirm([caller], caller, "register", {"party": caller, "role": role.value},
                      ["registered", caller])

    def register_area(self, caller: str, area: str, category: str) -> None:
        op = "produce"
        self._writer(caller, op)
        self._kinds(caller, op, [(area, {Kind.AREA}), (category, {Kind.CATEGORY})])
        self._fresh(caller, op, area, Reason.DUPLICATE_AREA)
        self._record(caller, area, EventKind.PRODUCING, INTACT, {"category": category})
        self._confirm([caller], caller, op, {"area": area, "category": category},
                      ["produced", caller, area, category])

    def create(self, caller: str, item: str, area: str, category: str | None = None) -> None:
        op = "create"
        self._writer(caller, op)
        area_state = self._known(caller, op, area)
        if self.state.owners.get(area) != caller:
            raise self._reject(caller, op, Reason.NOT_AREA_OWNER)
        self._kinds(caller, op, [(item, {Kind.ELEMENT}), (area, {Kind.AREA}), (category, {Kind.CATEGORY})])
        self._fresh(caller, op, item, Reason.DUPLICATE_ITEM)
        if area_state != INTACT:
            raise self._reject(caller, op, Reason.ILLEGAL_TRANSITION)
        self._record(caller, item, EventKind.CREATION, INTACT, {"area": area, "category": category})
        self.state.area_links[item] = area
        self._confirm([caller], caller, op, {"item": item, "area": area, "category": category},
                      ["created", caller, item, category, area])

    def transform(self, caller: str, new_item: str, inputs: list[str], category: str) -> None:
        op = "transform"
        if not inputs or len(set(inputs)) != len(inputs):
            raise self._reject(caller, op, Reason.MALFORMED)
        self._writer(caller, op)
        for asset in inputs:
            self._owned(caller, op, asset)
        self._kinds(caller, op, [(new_item, {Kind.ELEMENT}), (category, {Kind.CATEGORY})]
                    + [(a, {Kind.ELEMENT}) for a in inputs])
        self._fresh(caller, op, new_item, Reason.DUPLICATE_ITEM)
        for asset in inputs:
            if self.state.states[asset] != INTACT:
                raise self._reject(caller, op, Reason.INPUT_NOT_INTACT)
        for asset in inputs:
            successor = transition(self.state.states[asset], EventKind.TRANSFORMATION)
            self._record(caller, asset, EventKind.TRANSFORMATION, successor, {"into": new_item})
        self._record(caller, new_item, EventKind.TRANSFORMATION, INTACT,
                     {"inputs": list(inputs), "category": category})
        self._confirm([caller], caller, op, {"item": new_item, "inputs": list(inputs), "category": category},
                      ["transformed", caller, new_item, category, list(inputs)])

    def training(self, caller: str, category: str, fp: dict) -> None:
        op = "training"
        self._writer(caller, op)
        self._kinds(caller, op, [(category, {Kind.CATEGORY})])
        previous = self.state.fingerprints.get(category)
        if previous is not None and previous[0] != caller:
            raise self._reject(caller, op, Reason.NOT_ORIGINAL_TRAINER)
        self.state.fingerprints[category] = (caller, fp)
        self._record(caller, category, EventKind.TRAINING, INTACT, {"fp": fp})
        self._confirm([caller], caller, op, {"category": category, "fp": fp},
                      ["trained", caller, category, fp])

    def audit(self, caller: str, item: str, category: str, audit: dict) -> None:
        op = "audit"
        self._writer(caller, op)
        state = self._known(caller, op, item, Reason.UNKNOWN_ITEM)
        self._kinds(caller, op, [(item, {Kind.ELEMENT, Kind.BATCH}), (category, {Kind.CATEGORY})])
        if state == DESTROYED:
            raise self._reject(caller, op, Reason.ILLEGAL_TRANSITION)
        if (audit.get("item") != item or audit.get("category") != category
                or not self._audit_ok(caller, audit)):
            raise self._reject(caller, op, Reason.DEVICE_INVALID)
        certified = self.state.registered[caller] is Role.CERTIFIER
        self._record(self.state.owners[item], item, EventKind.AUDIT, state,
                     {"audit": audit, "category": category, "auditor": caller, "certified": certified})
        self._confirm([caller], caller, op, {"item": item, "category": category, "audit": audit},
                      ["audit", caller, item, audit])

    def aggregate(self, caller: str, batch: str, products: list[str]) -> None:
        op = "merge"
        if not products or len(set(products)) != len(products):
            raise self._reject(caller, op, Reason.MALFORMED)
        self._writer(caller, op)
        for asset in products:
            self._owned(caller, op, asset)
        self._kinds(caller, op, [(batch, {Kind.BATCH})] + [(a, {Kind.ELEMENT, Kind.BATCH}) for a in products])
        self._fresh(caller, op, batch, Reason.DUPLICATE_BATCH)
        successors = []
        for asset in products:
            try:
                successors.append(transition(self.state.states[asset], EventKind.AGGREGATION))
            except TransitionError:
                raise self._reject(caller, op, Reason.NOT_INTACT) from None
        for asset, successor in zip(products, successors):
            self._record(caller, asset, EventKind.AGGREGATION, successor, {"batch": batch})
        self._record(caller, batch, EventKind.AGGREGATION, INTACT, {"products": list(products)})
        self.state.batch_contents[batch] = list(products)
        self._confirm([caller], caller, op, {"batch": batch, "products": list(products)},
                      ["merged", caller, batch, list(products)])

    def disaggregate(self, caller: str, batch: str) -> None:
        op = "split"
        self._writer(caller, op)
        state = self._owned(caller, op, batch)
        if kind_of(batch) is not Kind.BATCH:
            raise self._reject(caller, op, Reason.NOT_A_BATCH)
        if state != INTACT:
            raise self._reject(caller, op, Reason.BATCH_NOT_INTACT)
        contents = self.state.batch_contents.pop(batch, [])
        for member in contents:
            successor = transition(self.state.states[member], EventKind.DISAGGREGATION)
            self._record(caller, member, EventKind.DISAGGREGATION, successor, {"batch": batch})
        self._record(caller, batch, EventKind.DISAGGREGATION,
                     transition(state, EventKind.DISAGGREGATION), {"products": list(contents)})
        self._confirm([caller], caller, op, {"batch": batch}, ["splitted", caller, batch])

    def handover_start(self, caller: str, asset: str, to: str) -> None:
        op = "handover"
        self._writer(caller, op)
        state = self._owned(caller, op, asset)
        self._kinds(caller, op, [(asset, {Kind.ELEMENT, Kind.BATCH})])
        try:
            successor = transition(state, EventKind.HANDOVER_STARTED, designee=to)
        except TransitionError:
            raise self._reject(caller, op, Reason.NOT_INTACT) from None
        if to == caller or self.state.registered.get(to) not in MEMBER_ROLES:
            raise self._reject(caller, op, Reason.RECIPIENT_NOT_AUTHORIZED)
        self._record(caller, asset, EventKind.HANDOVER_STARTED, successor, {"to": to})
        self._confirm([caller, to], caller, op, {"asset": asset, "from": caller, "to": to},
                      ["handover", asset, caller, to])

    def _pending(self, caller: str, op: str, asset: str, sender: str) -> AssetState:
        self._writer(caller, op)
        state = self._known(caller, op, asset)
        if state.kind is not StateKind.TRANS:
            raise self._reject(caller, op, Reason.NOT_IN_TRANSIT)
        if state.designee != caller:
            raise self._reject(caller, op, Reason.NOT_DESIGNEE)
        if self.state.owners.get(asset) != sender:
            raise self._reject(caller, op, Reason.NOT_IN_TRANSIT)
        return state

    def handover_receive(self, caller: str, asset: str, sender: str) -> None:
        op = "receive"
        state = self._pending(caller, op, asset, sender)
        self._record(caller, asset, EventKind.HANDOVER_ENDED,
                     transition(state, EventKind.HANDOVER_ENDED), {"from": sender})
        self._propagate_owner(asset, caller)
        self._confirm([sender, caller], caller, op, {"asset": asset, "by": caller, "from": sender},
                      ["received", asset, sender, caller])

    def handover_reject(self, caller: str, asset: str, sender: str) -> None:
        op = "reject"
        state = self._pending(caller, op, asset, sender)
        self._record(sender, asset, EventKind.HANDOVER_FAILED,
                     transition(state, EventKind.HANDOVER_FAILED), {"by": caller})
        self._confirm([sender, caller], caller, op, {"asset": asset, "by": caller, "from": sender},
                      ["rejected", asset, sender, caller])

    def update(self, caller: str, asset: str, newstate: str, proof: str | None = None) -> None:
        op = "update"
        self._writer(caller, op)
        state = self._owned(caller, op, asset)
        self._kinds(caller, op, [(asset, {Kind.ELEMENT, Kind.BATCH, Kind.AREA})])
        if newstate != StateKind.DESTROYED.value:
            raise self._reject(caller, op, Reason.ILLEGAL_TRANSITION)
        try:
            successor = transition(state, EventKind.UPDATE)
        except TransitionError:
            raise self._reject(caller, op, Reason.ILLEGAL_TRANSITION) from None
        if state == PACKAGED:
            parent = self._parent_batch(asset)
            if parent is not None:
                self.state.batch_contents[parent].remove(asset)
        self._record(caller, asset, EventKind.UPDATE, successor, {"newstate": newstate, "proof": proof})
        self._confirm([caller], caller, op, {"asset": asset, "newstate": newstate, "proof": proof},
                      ["updated", caller, asset, newstate, proof])

    def read(self, asset: str, caller: str | None = None) -> list[AssetRecord]:
        history = records_for(self.state.records, asset)
        if caller is not None:
            self._deliver(caller, ["read", asset, [r.to_json() for r in history]])
        return history
