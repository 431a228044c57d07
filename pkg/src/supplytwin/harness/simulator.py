"""Simulator for the dummy adversary in the ideal world.

The simulator emulates the ledger, signature and secure-channel
functionalities. Whenever the ideal supply chain reports an action of an
honest party, it forges the transaction that party would have posted. Whenever
a corrupted party posts a transaction, it checks the credential and signature
under its emulated keys and forwards the command to the ideal functionality.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from ..channel import Envelope, SecureChannel
from ..domain import Role, canonical_bytes
from ..errors import Reason, SupplyChainRejected
from ..ledger import DEVICE_OPS, Credential, Ledger, Transaction, credential_binding
from ..real.contract import DeviceEntry, Genesis, apply_device_tx, authenticate, bot_label, check_device_tx
from ..real.machines import ISSUER, REGISTRAR, Network, RegistrationAuthority, encode
from ..sig import SignatureFunctionality
from .scenario import sub_rng

if TYPE_CHECKING:
    from .worlds import IdealWorld

# Ideal command name -> transaction op an honest party would post.
TX_OP = {
    "produce": "produce", "create": "create", "transform": "transform", "training": "training",
    "audit": "audit", "merge": "merge", "split": "split", "handover": "handover",
    "receive": "received", "reject": "rejected", "update": "update",
}

SIMULATED = "simulated"
MACHINE = "machine"


class Simulator:
    def __init__(self, world: "IdealWorld", registrar: str = SIMULATED, broken: bool = False):
        if registrar not in (SIMULATED, MACHINE):
            raise ValueError(f"unknown registrar mode {registrar!r}")
        self.world = world
        self.corrupted = set(world.corrupted)
        tr = world.transcript
        self.sig = SignatureFunctionality(sub_rng(world.scenario.seed, "sim-sig"), on_leak=tr.adv)
        self.ledger = Ledger(corrupted=self.corrupted, on_leak=tr.adv, on_append=self._on_append)
        self.channel = SecureChannel(self.corrupted, on_leak=tr.adv)
        self.channel.attach(REGISTRAR, self._on_register_request)
        self.channel.attach(ISSUER, self._on_device_request)
        self.net = Network(self.sig, self.ledger, self.channel, world.scanner, tr.out, world.now)
        self.reg = RegistrationAuthority(self.net, listen=False) if registrar == MACHINE else None
        self.genesis: Genesis | None = None
        self.creds: dict[str, Credential] = {}
        self.nonces: dict[str, int] = {}
        self.devices: dict[str, DeviceEntry] = {}
        self._reg_cred: Credential | None = None
        self._reg_nonce = 0
        self.broken = broken
        self.dropped = 0

    # -- setup ----------------------------------------------------------------
    def setup(self) -> Genesis:
        for party in sorted(self.corrupted):
            self.sig.corrupt(party)
        if self.reg is not None:
            self.genesis = self.reg.init()
        else:
            pk = self.sig.keygen(REGISTRAR).pk.hex()
            attrs = {"role": Role.REGISTRAR.value}
            reg_sig = self.sig.sign(REGISTRAR, credential_binding(REGISTRAR, pk, attrs)).hex()
            self._reg_cred = Credential(REGISTRAR, pk, attrs, reg_sig)
            self.genesis = Genesis(REGISTRAR, pk)
            self.ledger.set_genesis(self.genesis.to_json())
        self.world.transcript.adv({"ev": "genesis", "genesis": self.genesis.to_json()})
        return self.genesis

    def close_corruption_phase(self) -> None:
        self.sig.close_corruption_phase()

    # -- emulated registrar -----------------------------------------------------
    def _certify(self, party: str, pk_hex: str, attrs: dict) -> Credential:
        if self.reg is not None:
            cred = self.reg.certify(party, pk_hex, attrs)
            self.reg.publish(cred)
            return cred
        reg_sig = self.sig.sign(REGISTRAR, credential_binding(party, pk_hex, attrs)).hex()
        cred = Credential(party, pk_hex, dict(attrs), reg_sig)
        payload = {"op": "enroll", "nonce": self._reg_nonce,
                   "args": {"party": party, "pk": pk_hex, "attrs": cred.attrs, "reg_sig": reg_sig}}
        sig = self.sig.sign(REGISTRAR, canonical_bytes(payload)).hex()
        self.ledger.submit(Transaction(payload, sig, self._reg_cred.to_json()), REGISTRAR)
        self._reg_nonce += 1
        return cred

    def _on_register_request(self, env: Envelope) -> None:
        msg = env.message()
        party = env.sender
        try:
            self.world.fsc.register(party, Role(msg["attrs"]["role"]))
        except SupplyChainRejected as exc:
            self.channel.send(REGISTRAR, party, encode({"type": "error", "reason": exc.reason.value}))
            return
        cred = self._certify(party, msg["pk"], msg["attrs"])
        self.creds[party] = cred
        self.nonces.setdefault(party, 0)
        self.channel.send(REGISTRAR, party, encode({"type": "registered", "cred": cred.to_json()}))

    def _on_device_request(self, env: Envelope) -> None:
        if env.message().get("type") == "device":
            self.world.provision(env.sender)

    # -- ideal outputs --------------------------------------------------------
    def on_output(self, party: str, msg: list) -> None:
        """Ideal outputs addressed to a corrupted party."""
        if msg[0] in ("registered", "read") or msg[:2] == ["bot", "register"]:
            return  # the corrupted machine reports these itself
        self.world.transcript.out(party, msg)

    def on_fsc(self, actor: str, op: str, args: dict, msg: list) -> None:
        """Adversary copy of an ideal confirmation."""
        if actor in self.corrupted:
            return
        if op == "register":
            session = self.sig.keygen(actor)
            self.creds[actor] = self._certify(actor, session.pk.hex(), {"role": args["role"]})
            self.nonces[actor] = 0
            return
        self._emulate(actor, TX_OP[op], args)

    def on_fp(self, msg: list) -> None:
        """Scanner leakage; honest device bookkeeping becomes ledger transactions."""
        tag = msg[0]
        if tag == "initialized_FF" and len(msg) == 2:
            self._emulate(ISSUER, "create_FF", {"device": msg[1], "issuer": ISSUER})
        elif tag == "received_FF" and msg[2] not in self.corrupted:
            self._emulate(msg[2], "handover_FF", {"device": msg[1], "from": msg[2], "to": msg[3]})
        elif tag == "deletedDevice":
            self._emulate(msg[1], "deleteDevice", {"device": msg[2], "issuer": msg[1]})

    def _emulate(self, party: str, op: str, args: dict) -> None:
        if self.broken and self.dropped == 0 and op not in DEVICE_OPS:
            self.dropped += 1
            return
        payload = {"op": op, "args": args, "nonce": self.nonces[party]}
        sig = self.sig.sign(party, canonical_bytes(payload)).hex()
        self.ledger.submit(Transaction(payload, sig, self.creds[party].to_json()), party)
        self.nonces[party] += 1
        if op in DEVICE_OPS:
            apply_device_tx(op, args, party, self.devices, 0)

    # -- corrupted parties' transactions ----------------------------------------
    def _on_append(self, index: int, tx: Transaction, sender: str) -> None:
        self.world.transcript.adv({"ev": "ledger", "index": index, "tx": tx.to_json()})
        if sender in self.corrupted:
            self._translate(tx, sender)

    def _bot(self, party: str, op: str | None, reason: Reason) -> None:
        self.world.transcript.out(party, ["bot", bot_label(op), reason.value])

    def _translate(self, tx: Transaction, sender: str) -> None:
        op, a = tx.op, tx.args
        reason = authenticate(tx, self.genesis, self.sig)
        if reason is not None:
            self._bot(sender, op, reason)
            return
        signer = tx.credential().party
        if op == "enroll":
            self._bot(sender, op, Reason.ALREADY_REGISTERED)
            return
        if op in DEVICE_OPS:
            try:
                role = Role(tx.credential().role)
            except ValueError:
                self._bot(sender, op, Reason.WRONG_ROLE)
                return
            reason = check_device_tx(op, a, signer, role, self.devices, self.world.scanner)
            if reason is not None:
                self._bot(sender, op, reason)
            else:
                apply_device_tx(op, a, signer, self.devices, 0)
            return
        if (op == "handover" and a["from"] != signer) or (op in ("received", "rejected") and a["by"] != signer):
            self._bot(sender, op, Reason.MALFORMED)
            return
        fsc = self.world.fsc
        calls = {
            "produce": lambda: fsc.register_area(signer, a["area"], a["category"]),
            "create": lambda: fsc.create(signer, a["item"], a["area"], a["category"]),
            "transform": lambda: fsc.transform(signer, a["item"], a["inputs"], a["category"]),
            "training": lambda: fsc.training(signer, a["category"], a["fp"]),
            "audit": lambda: fsc.audit(signer, a["item"], a["category"], a["audit"]),
            "merge": lambda: fsc.aggregate(signer, a["batch"], a["products"]),
            "split": lambda: fsc.disaggregate(signer, a["batch"]),
            "handover": lambda: fsc.handover_start(signer, a["asset"], a["to"]),
            "received": lambda: fsc.handover_receive(signer, a["asset"], a["from"]),
            "rejected": lambda: fsc.handover_reject(signer, a["asset"], a["from"]),
            "update": lambda: fsc.update(signer, a["asset"], a["newstate"], a.get("proof")),
        }
        try:
            calls[op]()
        except SupplyChainRejected:
            pass  # the ideal functionality already told the party
