"""Real-world protocol machines: registrar, parties and the device issuer."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Protocol

from ..channel import Envelope, SecureChannel
from ..domain import AssetRecord, Role, canonical_bytes
from ..errors import LedgerRejected, Reason, RegistrarError, ScannerError
from ..ledger import Credential, Transaction, credential_binding
from ..scanner import FingerprintScanner
from ..sig import SignatureFunctionality
from .contract import Genesis, SupplyChainContract, bot_label

REGISTRAR = "Reg"
ISSUER = "D"

Out = Callable[[str, list], None]


class Storage(Protocol):
    genesis: dict | None

    def submit(self, tx: Transaction, sender: str): ...

    def read(self, reader: str) -> list[Transaction]: ...

    def set_genesis(self, genesis: dict) -> None: ...


class View(Protocol):
    """A party's local picture of the supply chain."""

    def sync(self, entries: list[Transaction]) -> None: ...

    def check(self, payload: dict, cred: Credential) -> Reason | None: ...

    def records_for(self, asset: str) -> list[AssetRecord]: ...


@dataclass
class Network:
    """Handles to the functionalities a machine talks to."""

    sig: SignatureFunctionality
    ledger: Storage
    channel: SecureChannel
    scanner: FingerprintScanner
    out: Out
    now: Callable[[], int]
    registrar: str = REGISTRAR
    issuer: str = ISSUER


def encode(message: dict) -> bytes:
    return canonical_bytes(message)


class ContractView:
    """Local replica of the contract, advanced by reading the ledger."""

    def __init__(self, net: Network):
        self._net = net
        self._contract: SupplyChainContract | None = None
        self._synced = 0

    def _replica(self) -> SupplyChainContract:
        if self._contract is None:
            genesis = Genesis.from_json(self._net.ledger.genesis)
            self._contract = SupplyChainContract(genesis, self._net.sig, self._net.scanner)
        return self._contract

    def sync(self, entries: list[Transaction]) -> None:
        replica = self._replica()
        for tx in entries[self._synced:]:
            replica.apply(tx)
        self._synced = len(entries)

    def check(self, payload: dict, cred: Credential) -> Reason | None:
        return self._replica().check(payload, cred)

    def records_for(self, asset: str) -> list[AssetRecord]:
        return self._replica().records_for(asset)


class RegistrationAuthority:
    """Certifies party keys and publishes each enrollment on the ledger."""

    def __init__(self, net: Network, pid: str = REGISTRAR, listen: bool = True):
        self.net = net
        self.pid = pid
        self.enrolled: dict[str, Credential] = {}
        self.genesis: Genesis | None = None
        self._self_cred: Credential | None = None
        self._nonce = 0
        if listen:
            net.channel.attach(pid, self.on_message)

    def init(self) -> Genesis:
        if self.genesis is not None:
            raise RegistrarError(Reason.ALREADY_INITIALIZED, self.pid)
        session = self.net.sig.session(self.pid) or self.net.sig.keygen(self.pid)
        pk = session.pk.hex()
        attrs = {"role": Role.REGISTRAR.value}
        reg_sig = self.net.sig.sign(self.pid, credential_binding(self.pid, pk, attrs))
        self._self_cred = Credential(self.pid, pk, attrs, reg_sig.hex())
        self.genesis = Genesis(self.pid, pk)
        self.net.ledger.set_genesis(self.genesis.to_json())
        return self.genesis

    def certify(self, party: str, pk_hex: str, attrs: dict) -> Credential:
        if party in self.enrolled:
            raise RegistrarError(Reason.ALREADY_REGISTERED, party)
        reg_sig = self.net.sig.sign(self.pid, credential_binding(party, pk_hex, attrs))
        cred = Credential(party, pk_hex, dict(attrs), reg_sig.hex())
        self.enrolled[party] = cred
        return cred

    def publish(self, cred: Credential) -> None:
        payload = {"op": "enroll", "nonce": self._nonce,
                   "args": {"party": cred.party, "pk": cred.pk, "attrs": cred.attrs, "reg_sig": cred.reg_sig}}
        sig = self.net.sig.sign(self.pid, canonical_bytes(payload))
        self.net.ledger.submit(Transaction(payload, sig.hex(), self._self_cred.to_json()), self.pid)
        self._nonce += 1

    def enroll(self, party: str, pk_hex: str, attrs: dict) -> Credential:
        cred = self.certify(party, pk_hex, attrs)
        self.publish(cred)
        return cred

    def on_message(self, env: Envelope) -> None:
        msg = env.message()
        if msg.get("type") != "register":
            return
        try:
            cred = self.enroll(env.sender, msg["pk"], msg["attrs"])
            reply = {"type": "registered", "cred": cred.to_json()}
        except RegistrarError as exc:
            reply = {"type": "error", "reason": exc.reason.value}
        self.net.channel.send(self.pid, env.sender, encode(reply))


class PartyMachine:
    """Protocol code run by one party.

    Honest machines dry-run every command against their local replica and
    only submit legal transactions. Corrupted machines submit whatever they
    are told to, and expose the forging helpers an attacker would use.
    """

    def __init__(self, pid: str, role: Role, net: Network, honest: bool = True,
                 view: View | None = None, rng: random.Random | None = None):
        self.pid = pid
        self.role = Role(role)
        self.net = net
        self.honest = honest
        self.view: View = view or ContractView(net)
        self.rng = rng or random.Random(0)
        self.cred: Credential | None = None
        self.nonce = 0
        self.stash: dict | None = None
        net.channel.attach(pid, self.on_message)

    # -- messaging ----------------------------------------------------------
    def on_message(self, env: Envelope) -> None:
        msg = env.message()
        if msg.get("type") == "registered":
            self.cred = Credential.from_json(msg["cred"])
            self.net.out(self.pid, ["registered", self.pid])
        elif msg.get("type") == "error":
            self.net.out(self.pid, ["bot", "register", msg["reason"]])

    def _send(self, to: str, message: dict) -> None:
        self.net.channel.send(self.pid, to, encode(message))
        self.net.channel.pump()

    def _bot(self, label: str, reason: Reason | str) -> None:
        self.net.out(self.pid, ["bot", label, str(reason)])

    # -- registration and devices ---------------------------------------------
    def register(self) -> None:
        session = self.net.sig.session(self.pid) or self.net.sig.keygen(self.pid)
        self._send(self.net.registrar, {"type": "register", "pk": session.pk.hex(),
                                        "attrs": {"role": self.role.value}})

    def device(self) -> str | None:
        owned = self.net.scanner.devices_of(self.pid)
        return owned[0].device if owned else None

    def request_device(self) -> None:
        if self.cred is None:
            self._bot("device", Reason.NOT_REGISTERED)
            return
        self._send(self.net.issuer, {"type": "device"})

    def ensure_device(self) -> str | None:
        if self.device() is None:
            self._send(self.net.issuer, {"type": "device"})
        return self.device()

    def handover_device(self, to: str) -> None:
        if self.cred is None:
            self._bot("handover_FF", Reason.NOT_REGISTERED)
            return
        device = self.device()
        try:
            self.net.scanner.handover_device(self.pid, to, device)
        except ScannerError:
            return
        self.submit("handover_FF", {"device": device, "from": self.pid, "to": to})

    # -- transactions -------------------------------------------------------
    def sign_and_submit(self, payload: dict, cred: dict, label: str) -> bool:
        sig = self.net.sig.sign(self.pid, canonical_bytes(payload))
        return self.send_tx(Transaction(payload, sig.hex(), cred), label)

    def send_tx(self, tx: Transaction, label: str) -> bool:
        try:
            self.net.ledger.submit(tx, self.pid)
        except LedgerRejected as exc:
            self._bot(label, exc.reason)
            return False
        self.nonce += 1
        return True

    def submit(self, op: str, args: dict) -> bool:
        label = bot_label(op)
        if self.cred is None:
            self._bot(label, Reason.NOT_REGISTERED)
            return False
        payload = {"op": op, "args": args, "nonce": self.nonce}
        if self.honest:
            self.view.sync(self.net.ledger.read(self.pid))
            reason = self.view.check(payload, self.cred)
            if reason is not None:
                self._bot(label, reason)
                return False
        return self.sign_and_submit(payload, self.cred.to_json(), label)

    # -- supply-chain commands ----------------------------------------------
    def produce(self, area: str, category: str) -> bool:
        return self.submit("produce", {"area": area, "category": category})

    def create(self, item: str, area: str, category: str | None = None) -> bool:
        return self.submit("create", {"item": item, "area": area, "category": category})

    def transform(self, item: str, inputs: list[str], category: str) -> bool:
        return self.submit("transform", {"item": item, "inputs": list(inputs), "category": category})

    def merge(self, batch: str, products: list[str]) -> bool:
        return self.submit("merge", {"batch": batch, "products": list(products)})

    def split(self, batch: str) -> bool:
        return self.submit("split", {"batch": batch})

    def handover(self, asset: str, to: str) -> bool:
        return self.submit("handover", {"asset": asset, "from": self.pid, "to": to})

    def receive(self, asset: str, sender: str) -> bool:
        return self.submit("received", {"asset": asset, "by": self.pid, "from": sender})

    def reject(self, asset: str, sender: str) -> bool:
        return self.submit("rejected", {"asset": asset, "by": self.pid, "from": sender})

    def update(self, asset: str, newstate: str, proof: str | None = None) -> bool:
        return self.submit("update", {"asset": asset, "newstate": newstate, "proof": proof})

    def train(self, category: str, samples: list[str]) -> bool:
        if self.cred is None:
            self._bot("training", Reason.NOT_REGISTERED)
            return False
        device = self.ensure_device()
        try:
            fp = self.net.scanner.train(self.pid, device, category, samples, self.net.now())
        except ScannerError:
            return False
        if fp is None:
            return False
        return self.submit("training", {"category": category, "fp": fp.to_json()})

    def scan(self, item: str, category: str, physical: str) -> dict | None:
        device = self.ensure_device()
        try:
            audit = self.net.scanner.verify_item(self.pid, device, physical, category, self.net.now(), claimed=item)
        except ScannerError:
            return None
        return audit.to_json() if audit is not None else None

    def audit(self, item: str, category: str, physical: str) -> bool:
        if self.cred is None:
            self._bot("audit", Reason.NOT_REGISTERED)
            return False
        audit = self.scan(item, category, physical)
        if audit is None:
            return False
        return self.submit("audit", {"item": item, "category": category, "audit": audit})

    def read(self, asset: str) -> list[AssetRecord]:
        self.view.sync(self.net.ledger.read(self.pid))
        history = self.view.records_for(asset)
        self.net.out(self.pid, ["read", asset, [r.to_json() for r in history]])
        return history

    # -- attacker helpers (corrupted machines only) ---------------------------
    def _own_pk(self) -> str:
        session = self.net.sig.session(self.pid) or self.net.sig.keygen(self.pid)
        return session.pk.hex()

    def forge_credential(self, op: str, args: dict, role: str) -> bool:
        """Claim ``role`` with a credential the registrar never signed."""
        cred = Credential(self.pid, self._own_pk(), {"role": role}, self.rng.randbytes(64).hex())
        payload = {"op": op, "args": args, "nonce": self.nonce}
        return self.sign_and_submit(payload, cred.to_json(), bot_label(op))

    def victim_credential(self, victim: str) -> dict:
        for tx in self.net.ledger.read(self.pid):
            if tx.op == "enroll" and tx.args.get("party") == victim:
                a = tx.args
                return {"party": victim, "pk": a["pk"], "attrs": a["attrs"], "reg_sig": a["reg_sig"]}
        return {"party": victim, "pk": "", "attrs": {}, "reg_sig": ""}

    def forge_signature(self, victim: str, op: str, args: dict) -> bool:
        """Present the victim's credential but sign with our own key."""
        self._own_pk()
        payload = {"op": op, "args": args, "nonce": self.nonce}
        return self.sign_and_submit(payload, self.victim_credential(victim), bot_label(op))

    def replay(self, index: int) -> bool:
        entries = self.net.ledger.read(self.pid)
        if not 0 <= index < len(entries):
            return False
        tx = entries[index]
        try:
            self.net.ledger.submit(tx, self.pid)
        except LedgerRejected as exc:
            self._bot(bot_label(tx.op), exc.reason)
            return False
        return True

    def stash_audit(self, item: str, category: str, physical: str) -> None:
        audit = self.scan(item, category, physical)
        if audit is not None:
            self.stash = {"item": item, "category": category, "audit": audit}

    def submit_stash(self) -> bool:
        if self.stash is None:
            return False
        return self.submit("audit", dict(self.stash))


class DeviceIssuerMachine(PartyMachine):
    """The single trusted issuer of fingerprint scanners."""

    def on_message(self, env: Envelope) -> None:
        msg = env.message()
        if msg.get("type") == "device":
            self.provision(env.sender)
        else:
            super().on_message(env)

    def init_device(self) -> str:
        record = self.net.scanner.init_device(self.pid)
        self.submit("create_FF", {"device": record.device, "issuer": self.pid})
        return record.device

    def provision(self, party: str) -> None:
        device = self.device() or self.init_device()
        self.net.scanner.handover_device(self.pid, party, device)
        self.submit("handover_FF", {"device": device, "from": self.pid, "to": party})

    def withdraw_device(self, device: str | None) -> None:
        try:
            self.net.scanner.withdraw_device(self.pid, device)
        except ScannerError:
            return
        self.submit("deleteDevice", {"device": device, "issuer": self.pid})

