"""The two executions the environment can be placed in.

``RealWorld`` runs the protocol machines over the ledger, signature and
channel functionalities with the contract folding the ledger. ``IdealWorld``
runs dummy parties against the ideal supply chain with the simulator standing
in for the adversary. Both share the physical layer: goods and the
fingerprint scanner.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..domain import AssetRecord, AssetState, IdRegistry, Role
from ..errors import Reason, ScannerError, SupplyChainRejected
from ..ideal import IdealSupplyChain
from ..ledger import InternalList, Ledger
from ..real.contract import SupplyChainContract, bot_label
from ..real.machines import ISSUER, DeviceIssuerMachine, Network, PartyMachine, RegistrationAuthority
from ..channel import SecureChannel
from ..scanner import ACTIVE, FingerprintScanner
from ..sig import SignatureFunctionality
from .scenario import Scenario, Step, build_goods, build_names, resolve_command, sub_rng
from .simulator import SIMULATED, Simulator
from .transcript import Divergence, Transcript, first_divergence

NO_DEVICE = "D" + "0" * 32


class World:
    kind = "world"

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.corrupted = set(scenario.corrupted)
        self.transcript = Transcript()
        self.registry = IdRegistry()
        self.names = build_names(scenario, self.registry)
        self.goods = build_goods(scenario, self.names)
        self.scanner = FingerprintScanner(ISSUER, self.goods, self.registry,
                                          sub_rng(scenario.seed, "fp"), notify=self._fp_notify)
        self.clock = 0
        self._ran = False

    # -- shared plumbing --------------------------------------------------------
    def now(self) -> int:
        return self.clock

    def _fp_notify(self, recipients: list[str], msg: list) -> None:
        for party in recipients:
            self.transcript.out(party, msg)
        self.transcript.adv({"ev": "fp", "msg": msg})

    def id(self, name: str | None) -> str | None:
        return None if name is None else self.names.ids[name]

    def device_of(self, party: str) -> str | None:
        owned = self.scanner.devices_of(party)
        return owned[0].device if owned else None

    def _command(self, command: dict) -> tuple[str, dict]:
        op, args = resolve_command(self.names, command)
        ref = args.get("device")
        if isinstance(ref, dict):
            args["device"] = self.device_of(ref.get("owner", "")) or NO_DEVICE
        return op, args

    def drive(self, machine: PartyMachine, step: Step) -> None:
        """Run one scenario step on a protocol machine."""
        a, op, i = step.args, step.op, self.id
        if op == "register":
            machine.register()
        elif op == "request_device":
            machine.request_device()
        elif op == "init_device":
            machine.init_device()
        elif op == "withdraw_device":
            machine.withdraw_device(self.device_of(a["owner"]))
        elif op == "handover_device":
            machine.handover_device(a["to"])
        elif op == "produce":
            machine.produce(i(a["area"]), i(a["category"]))
        elif op == "create":
            machine.create(i(a["item"]), i(a["area"]), i(a.get("category")))
        elif op == "transform":
            machine.transform(i(a["item"]), [i(x) for x in a["inputs"]], i(a["category"]))
        elif op == "train":
            machine.train(i(a["category"]), [i(x) for x in a["samples"]])
        elif op == "audit":
            machine.audit(i(a["item"]), i(a["category"]), i(a.get("physical", a["item"])))
        elif op == "merge":
            machine.merge(i(a["batch"]), [i(x) for x in a["products"]])
        elif op == "split":
            machine.split(i(a["batch"]))
        elif op == "handover":
            machine.handover(i(a["asset"]), a["to"])
        elif op == "receive":
            machine.receive(i(a["asset"]), a["from"])
        elif op == "reject":
            machine.reject(i(a["asset"]), a["from"])
        elif op == "update":
            machine.update(i(a["asset"]), a["newstate"], a.get("proof"))
        elif op == "read":
            machine.read(i(a["asset"]))
        elif op == "forge_credential":
            machine.forge_credential(*self._command(a["command"]), role=a["role"])
        elif op == "forge_signature":
            machine.forge_signature(a["victim"], *self._command(a["command"]))
        elif op == "submit_raw":
            machine.submit(*self._command(a["command"]))
        elif op == "replay":
            machine.replay(a["index"])
        elif op == "stash_audit":
            machine.stash_audit(i(a["item"]), i(a["category"]), i(a.get("physical", a["item"])))
        elif op == "submit_stash":
            machine.submit_stash()
        else:  # pragma: no cover - scenario validation rejects unknown ops
            raise ValueError(op)

    # -- lifecycle ------------------------------------------------------------
    def setup(self) -> None:
        raise NotImplementedError

    def step(self, step: Step) -> None:
        raise NotImplementedError

    def run(self) -> dict:
        """Execute the scenario once and return the raw observable trace."""
        if self._ran:
            raise RuntimeError("a world runs its scenario once")
        self._ran = True
        self.setup()
        for n, step in enumerate(self.scenario.steps, start=1):
            self.clock = n
            self.transcript.begin_step(n, step.actor, step.op)
            self.step(step)
        self.transcript.ledger = [tx.to_json() for tx in self.ledger_entries()]
        return self.transcript.to_json()

    # -- inspection -----------------------------------------------------------
    def ledger_entries(self) -> list:
        raise NotImplementedError

    def records(self) -> list[AssetRecord]:
        raise NotImplementedError

    def owners(self) -> dict[str, str]:
        raise NotImplementedError

    def states(self) -> dict[str, AssetState]:
        raise NotImplementedError


class RealWorld(World):
    kind = "real"

    def __init__(self, scenario: Scenario, storage: str = "ledger", ledger_path: str | Path | None = None):
        super().__init__(scenario)
        tr = self.transcript
        self.sig = SignatureFunctionality(sub_rng(scenario.seed, "sig"), on_leak=tr.adv)
        common = dict(corrupted=self.corrupted, on_leak=tr.adv, on_append=self._on_append)
        if storage == "ledger":
            self.ledger = Ledger(path=ledger_path, **common)
        elif storage == "list":
            self.ledger = InternalList(**common)
        else:
            raise ValueError(f"unknown storage {storage!r}")
        self.channel = SecureChannel(self.corrupted, on_leak=tr.adv)
        self.net = Network(self.sig, self.ledger, self.channel, self.scanner, tr.out, self.now)
        self.reg = RegistrationAuthority(self.net)
        self.contract: SupplyChainContract | None = None
        self.machines: dict[str, PartyMachine] = {}
        for pid, role in scenario.parties.items():
            cls = DeviceIssuerMachine if pid == ISSUER else PartyMachine
            self.machines[pid] = cls(pid, role, self.net, honest=pid not in self.corrupted,
                                     rng=sub_rng(scenario.seed, f"adv:{pid}"))

    def setup(self) -> None:
        for party in sorted(self.corrupted):
            self.sig.corrupt(party)
        genesis = self.reg.init()
        self.transcript.adv({"ev": "genesis", "genesis": genesis.to_json()})
        self.contract = SupplyChainContract(genesis, self.sig, self.scanner)
        self.machines[ISSUER].register()
        self.sig.close_corruption_phase()

    def _on_append(self, index: int, tx, sender: str) -> None:
        self.transcript.adv({"ev": "ledger", "index": index, "tx": tx.to_json()})
        outcome = self.contract.apply(tx)
        if outcome.accepted:
            for recipients, msg in outcome.notices:
                for party in recipients:
                    self.transcript.out(party, msg)
        else:
            self.transcript.out(sender, ["bot", bot_label(outcome.op), outcome.reason.value])

    def step(self, step: Step) -> None:
        self.drive(self.machines[step.actor], step)

    @property
    def storage(self):
        return self.ledger

    def ledger_entries(self) -> list:
        return list(self.ledger.entries)

    def records(self) -> list[AssetRecord]:
        return list(self.contract.state.records)

    def owners(self) -> dict[str, str]:
        return dict(self.contract.state.owners)

    def states(self) -> dict[str, AssetState]:
        return dict(self.contract.state.states)


class FunctionalityView:
    """What a corrupted party learns by reading: the ideal records."""

    def __init__(self, fsc: IdealSupplyChain):
        self._fsc = fsc

    def sync(self, entries) -> None:
        pass

    def check(self, payload, cred):
        return None

    def records_for(self, asset: str) -> list[AssetRecord]:
        return self._fsc.read(asset)


class IdealWorld(World):
    kind = "ideal"

    def __init__(self, scenario: Scenario, registrar: str = SIMULATED, broken: bool = False):
        super().__init__(scenario)
        self.fsc = IdealSupplyChain(deliver=self._deliver, leak=self._leak, audit_validator=self._audit_ok)
        self.sim = Simulator(self, registrar=registrar, broken=broken)
        self.known_registered: set[str] = set()
        self.machines: dict[str, PartyMachine] = {
            pid: PartyMachine(pid, scenario.parties[pid], self.sim.net, honest=False,
                              view=FunctionalityView(self.fsc), rng=sub_rng(scenario.seed, f"adv:{pid}"))
            for pid in sorted(self.corrupted)
        }

    # -- routing --------------------------------------------------------------
    def _deliver(self, party: str, msg: list) -> None:
        if party in self.corrupted:
            self.sim.on_output(party, msg)
            return
        if msg[0] == "registered":
            self.known_registered.add(party)
        self.transcript.out(party, msg)

    def _leak(self, actor: str, op: str, args: dict, msg: list) -> None:
        self.sim.on_fsc(actor, op, args, msg)

    def _fp_notify(self, recipients: list[str], msg: list) -> None:
        super()._fp_notify(recipients, msg)
        self.sim.on_fp(msg)

    def _audit_ok(self, caller: str, audit: dict) -> bool:
        record = self.scanner.devices.get(audit.get("device"))
        return record is not None and record.status == ACTIVE and self.scanner.issued_to(audit) == caller

    # -- physical issuer --------------------------------------------------------
    def provision(self, party: str) -> None:
        device = self.device_of(ISSUER) or self.scanner.init_device(ISSUER).device
        self.scanner.handover_device(ISSUER, party, device)

    def _ensure_device(self, party: str) -> str | None:
        if self.device_of(party) is None:
            self.provision(party)
        return self.device_of(party)

    # -- lifecycle ------------------------------------------------------------
    def setup(self) -> None:
        self.sim.setup()
        self.fsc.register(ISSUER, Role.DEVICE_ISSUER)
        self.sim.close_corruption_phase()

    def step(self, step: Step) -> None:
        if step.actor in self.corrupted:
            self.drive(self.machines[step.actor], step)
            return
        try:
            self._honest(step)
        except (SupplyChainRejected, ScannerError):
            pass

    def _needs_registration(self, party: str, label: str) -> bool:
        if party in self.known_registered:
            return False
        self.transcript.out(party, ["bot", label, Reason.NOT_REGISTERED.value])
        return True

    def _honest(self, step: Step) -> None:
        p, a, op, i, fsc = step.actor, step.args, step.op, self.id, self.fsc
        if op == "register":
            fsc.register(p, self.scenario.parties[p])
        elif op == "request_device":
            if not self._needs_registration(p, "device"):
                self.provision(p)
        elif op == "init_device":
            self.scanner.init_device(p)
        elif op == "withdraw_device":
            self.scanner.withdraw_device(p, self.device_of(a["owner"]))
        elif op == "handover_device":
            if not self._needs_registration(p, "handover_FF"):
                self.scanner.handover_device(p, a["to"], self.device_of(p))
        elif op == "produce":
            fsc.register_area(p, i(a["area"]), i(a["category"]))
        elif op == "create":
            fsc.create(p, i(a["item"]), i(a["area"]), i(a.get("category")))
        elif op == "transform":
            fsc.transform(p, i(a["item"]), [i(x) for x in a["inputs"]], i(a["category"]))
        elif op == "train":
            if not self._needs_registration(p, "training"):
                device = self._ensure_device(p)
                fp = self.scanner.train(p, device, i(a["category"]), [i(x) for x in a["samples"]], self.now())
                if fp is not None:
                    fsc.training(p, i(a["category"]), fp.to_json())
        elif op == "audit":
            if not self._needs_registration(p, "audit"):
                device = self._ensure_device(p)
                audit = self.scanner.verify_item(p, device, i(a.get("physical", a["item"])), i(a["category"]),
                                                 self.now(), claimed=i(a["item"]))
                if audit is not None:
                    fsc.audit(p, i(a["item"]), i(a["category"]), audit.to_json())
        elif op == "merge":
            fsc.aggregate(p, i(a["batch"]), [i(x) for x in a["products"]])
        elif op == "split":
            fsc.disaggregate(p, i(a["batch"]))
        elif op == "handover":
            fsc.handover_start(p, i(a["asset"]), a["to"])
        elif op == "receive":
            fsc.handover_receive(p, i(a["asset"]), a["from"])
        elif op == "reject":
            fsc.handover_reject(p, i(a["asset"]), a["from"])
        elif op == "update":
            fsc.update(p, i(a["asset"]), a["newstate"], a.get("proof"))
        elif op == "read":
            fsc.read(i(a["asset"]), caller=p)
        else:  # pragma: no cover - attack ops are only valid for corrupted actors
            raise ValueError(op)

    # -- inspection -----------------------------------------------------------
    @property
    def storage(self):
        return self.sim.ledger

    def ledger_entries(self) -> list:
        return list(self.sim.ledger.entries)

    def records(self) -> list[AssetRecord]:
        return list(self.fsc.state.records)

    def owners(self) -> dict[str, str]:
        return dict(self.fsc.state.owners)

    def states(self) -> dict[str, AssetState]:
        return dict(self.fsc.state.states)


@dataclass
class Verdict:
    equal: bool
    divergence: Divergence | None = None
    real: dict | None = None
    ideal: dict | None = None

    def to_json(self) -> dict:
        doc: dict = {"equal": self.equal}
        if self.divergence is not None:
            d = self.divergence
            doc["divergence"] = {"where": d.where, "real": d.real, "ideal": d.ideal}
        return doc


def run_real(scenario: Scenario, storage: str = "ledger", ledger_path: str | Path | None = None) -> dict:
    """Trace of the protocol run over the hybrid functionalities."""
    return RealWorld(scenario, storage=storage, ledger_path=ledger_path).run()


def run_ideal(scenario: Scenario, registrar: str = SIMULATED, broken: bool = False) -> dict:
    """Trace of the ideal supply chain with the simulator as adversary."""
    return IdealWorld(scenario, registrar=registrar, broken=broken).run()


def compare(real: dict, ideal: dict) -> Verdict:
    divergence = first_divergence(real, ideal)
    return Verdict(divergence is None, divergence, real, ideal)


def assert_equivalence(scenario: Scenario, broken: bool = False) -> Verdict:
    """Run both worlds and compare normalized traces byte for byte."""
    return compare(run_real(scenario), run_ideal(scenario, broken=broken))
