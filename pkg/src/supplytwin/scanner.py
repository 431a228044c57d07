"""Ideal fingerprint-scanner functionality.

Devices are issued by a single trusted issuer, trained on genuine samples of a
category, and used to check whether a physical item matches that category.
Every output goes to the calling party and is leaked to the adversary.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .domain import IdRegistry, Kind, canonical_json
from .errors import Reason, ScannerError
from .goods import CategoryFingerprint, GoodsWorld, measure

MIN_TRAINING_SAMPLES = 3
# Smallest tolerance the estimator will report. Equal to the goods model's
# default box width so that a genuine item is never rejected by a narrow fit.
TOLERANCE_FLOOR = 1.0

ACTIVE = "active"
WITHDRAWN = "withdrawn"

Notify = Callable[[list[str], list], None]


@dataclass
class DeviceRecord:
    device: str
    owner: str
    status: str
    issuer: str

    def to_json(self) -> dict:
        return {"device": self.device, "owner": self.owner, "status": self.status, "issuer": self.issuer}


@dataclass(frozen=True)
class AuditData:
    device: str
    result: str
    item: str
    category: str
    measured: tuple[float, ...]
    t: int

    @property
    def passed(self) -> bool:
        return self.result == "pass"

    def to_json(self) -> dict:
        return {
            "device": self.device,
            "result": self.result,
            "item": self.item,
            "category": self.category,
            "measured": list(self.measured),
            "t": self.t,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AuditData":
        return cls(doc["device"], doc["result"], doc["item"], doc["category"], tuple(doc["measured"]), int(doc["t"]))


def estimate(category: str, samples: Sequence[Sequence[float]], now: int, trainer: str,
             floor: float = TOLERANCE_FLOOR) -> CategoryFingerprint:
    """Sample mean and a tolerance of twice the largest deviation, floored."""
    dim = len(samples[0])
    mean = tuple(sum(s[k] for s in samples) / len(samples) for k in range(dim))
    tol = tuple(max(2 * max(abs(s[k] - mean[k]) for s in samples), floor) for k in range(dim))
    return CategoryFingerprint(category, mean, tol, now, trainer)


def matches(fp: CategoryFingerprint, measured: Sequence[float]) -> bool:
    return all(abs(m - mu) < tol for m, mu, tol in zip(measured, fp.est_mean, fp.est_tolerance))


class FingerprintScanner:
    def __init__(
        self,
        issuer: str,
        goods: GoodsWorld,
        registry: IdRegistry,
        rng: random.Random,
        notify: Notify | None = None,
        tolerance_floor: float = TOLERANCE_FLOOR,
    ):
        self.issuer = issuer
        self.goods = goods
        self._registry = registry
        self._rng = rng
        self._notify = notify or (lambda recipients, msg: None)
        self.tolerance_floor = tolerance_floor
        self.devices: dict[str, DeviceRecord] = {}
        self.fingerprints: dict[str, CategoryFingerprint] = {}
        self.events: list[dict] = []
        self._issued: dict[str, str] = {}

    # -- helpers ------------------------------------------------------------
    def _fail(self, caller: str, op: str, reason: Reason) -> ScannerError:
        self._notify([caller], ["bot_FF", op, reason.value])
        return ScannerError(reason, f"{op} by {caller}")

    def _usable(self, caller: str, device: str | None, op: str) -> DeviceRecord:
        record = self.devices.get(device) if device is not None else None
        if record is None:
            raise self._fail(caller, op, Reason.UNKNOWN_DEVICE)
        if record.owner != caller:
            raise self._fail(caller, op, Reason.NOT_DEVICE_OWNER)
        if record.status != ACTIVE:
            raise self._fail(caller, op, Reason.DEVICE_WITHDRAWN)
        return record

    def has_event(self, **fields) -> bool:
        return any(all(e.get(k) == v for k, v in fields.items()) for e in self.events)

    def issued_to(self, audit: dict) -> str | None:
        """Party a genuine output was issued to, or None if never issued."""
        return self._issued.get(canonical_json(audit))

    def read_registry(self) -> list[DeviceRecord]:
        return [DeviceRecord(**r.to_json()) for r in self.devices.values()]

    def devices_of(self, party: str, active_only: bool = True) -> list[DeviceRecord]:
        return [r for r in self.devices.values()
                if r.owner == party and (r.status == ACTIVE or not active_only)]

    # -- device lifecycle ---------------------------------------------------
    def init_device(self, caller: str) -> DeviceRecord:
        if caller != self.issuer:
            raise self._fail(caller, "init", Reason.NOT_ISSUER)
        device = self._registry.mint(Kind.DEVICE, self._rng)
        record = DeviceRecord(device, caller, ACTIVE, caller)
        self.devices[device] = record
        self.events.append({"event": "init", "device": device, "issuer": caller})
        self._notify([caller], ["initialized_FF", device])
        return record

    def handover_device(self, sender: str, recipient: str, device: str | None) -> DeviceRecord:
        record = self._usable(sender, device, "handover")
        record.owner = recipient
        self.events.append({"event": "handover", "device": record.device, "from": sender, "to": recipient})
        self._notify([sender, recipient], ["received_FF", record.device, sender, recipient])
        return record

    def withdraw_device(self, caller: str, device: str | None) -> DeviceRecord:
        if caller != self.issuer:
            raise self._fail(caller, "delete", Reason.NOT_ISSUER)
        record = self.devices.get(device) if device is not None else None
        if record is None:
            raise self._fail(caller, "delete", Reason.UNKNOWN_DEVICE)
        if record.issuer != caller:
            raise self._fail(caller, "delete", Reason.NOT_ORIGINAL_ISSUER)
        if record.status != ACTIVE:
            raise self._fail(caller, "delete", Reason.DEVICE_WITHDRAWN)
        record.status = WITHDRAWN
        self.events.append({"event": "withdraw", "device": record.device, "issuer": caller})
        self._notify([caller], ["deletedDevice", caller, record.device])
        return record

    # -- fingerprints -------------------------------------------------------
    def train(self, caller: str, device: str | None, category: str, samples: Sequence[str],
              now: int) -> CategoryFingerprint | None:
        """Fit a category fingerprint; None (and a trainingfailed output) if samples disagree."""
        self._usable(caller, device, "train")
        previous = self.fingerprints.get(category)
        if previous is not None and previous.trained_by != caller:
            raise self._fail(caller, "train", Reason.NOT_ORIGINAL_TRAINER)
        items = []
        for name in samples:
            item = self.goods.get(name)
            if item is None:
                raise self._fail(caller, "train", Reason.UNKNOWN_ITEM)
            if item.consumed:
                raise self._fail(caller, "train", Reason.ITEM_CONSUMED)
            items.append(item)
        if (len(set(samples)) < MIN_TRAINING_SAMPLES
                or len(items) != len(set(samples))
                or any(i.true_category != category for i in items)):
            self._notify([caller], ["trainingfailed_FF", category])
            return None
        fp = estimate(category, [measure(i, now) for i in items], now, caller, self.tolerance_floor)
        for item in items:
            item.consumed = True
        self.fingerprints[category] = fp
        self.events.append({"event": "train", "category": category, "by": caller})
        tag = "initialized_FF" if previous is None else "updated_FF"
        self._notify([caller], [tag, category, fp.to_json()])
        return fp

    def verify_item(self, caller: str, device: str | None, item: str, category: str, now: int,
                    claimed: str | None = None) -> AuditData | None:
        """Scan physical ``item``; ``claimed`` is the digital id it is presented as."""
        record = self._usable(caller, device, "verify")
        physical = self.goods.get(item)
        if physical is None:
            raise self._fail(caller, "verify", Reason.UNKNOWN_ITEM)
        subject = claimed or item
        fp = self.fingerprints.get(category)
        if fp is None:
            self._notify([caller], ["evalfailed_FF", subject, category])
            return None
        measured = measure(physical, now)
        result = "pass" if matches(fp, measured) else "fail"
        audit = AuditData(record.device, result, subject, category, tuple(measured), now)
        doc = audit.to_json()
        self._issued[canonical_json(doc)] = caller
        self._notify([caller], ["evalued_FF", doc])
        return audit
