"""Observable traces, their normalization and comparison.

A trace holds what the environment sees: every party output and every event
the dummy adversary observes, grouped per scenario step, plus the final ledger.
Normalization replaces values that legitimately differ between runs (random
ids, keys, signatures, absolute times) by first-appearance tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterator

from ..domain import ASSET_ID_RE, canonical_json

KEY_FIELDS = {"pk": "PK", "sk": "SK", "sig": "SIG", "reg_sig": "SIG"}
_TOKEN_RE = re.compile(r"^([ECBAD]|PK|SK|SIG)#\d+$")


@dataclass
class Segment:
    label: dict
    out: list = field(default_factory=list)
    adv: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {**self.label, "out": self.out, "adv": self.adv}


class Transcript:
    """Collects outputs and adversary observations as a world runs."""

    def __init__(self) -> None:
        self.setup = Segment({"phase": "setup"})
        self.steps: list[Segment] = []
        self._current = self.setup
        self.ledger: list[dict] = []

    def begin_step(self, index: int, actor: str, op: str) -> None:
        self._current = Segment({"step": index, "actor": actor, "op": op})
        self.steps.append(self._current)

    def out(self, party: str, msg: list) -> None:
        self._current.out.append([party, msg])

    def adv(self, event: dict) -> None:
        self._current.adv.append(event)

    def to_json(self) -> dict:
        return {
            "setup": self.setup.to_json(),
            "steps": [s.to_json() for s in self.steps],
            "ledger": self.ledger,
        }


class _Normalizer:
    def __init__(self) -> None:
        self.tokens: dict[tuple[str, str], str] = {}
        self.counts: dict[str, int] = {}
        self.times: dict[int, int] = {}

    def token(self, space: str, value: str) -> str:
        key = (space, value)
        if key not in self.tokens:
            self.counts[space] = self.counts.get(space, 0) + 1
            self.tokens[key] = f"{space}#{self.counts[space]}"
        return self.tokens[key]

    def walk(self, obj: Any, key: str | None = None) -> Any:
        if isinstance(obj, dict):
            return {k: self.walk(obj[k], k) for k in sorted(obj)}
        if isinstance(obj, list):
            return [self.walk(v, key) for v in obj]
        if isinstance(obj, str):
            if key in KEY_FIELDS and not _TOKEN_RE.match(obj):
                return self.token(KEY_FIELDS[key], obj)
            if ASSET_ID_RE.match(obj):
                return self.token(obj[0], obj)
            if _TOKEN_RE.match(obj):
                # already normalized; register it so numbering stays stable
                space = obj.split("#")[0]
                return self.token(space, obj)
            return obj
        if key == "t" and isinstance(obj, int) and not isinstance(obj, bool):
            if obj not in self.times:
                self.times[obj] = len(self.times)
            return self.times[obj]
        return obj


def normalize(trace: dict) -> dict:
    """Idempotent canonical form used for trace equality."""
    return _Normalizer().walk(trace)


def canonical(trace: dict) -> str:
    return canonical_json(normalize(trace))


@dataclass(frozen=True)
class Divergence:
    where: str
    real: Any
    ideal: Any

    def describe(self) -> str:
        return f"first divergence at {self.where}:\n  real : {canonical_json(self.real)}\n  ideal: {canonical_json(self.ideal)}"


def _events(doc: dict) -> Iterator[tuple[str, Any]]:
    setup = doc.get("setup", {})
    for channel in ("out", "adv"):
        for n, ev in enumerate(setup.get(channel, [])):
            yield f"setup.{channel}[{n}]", ev
        yield f"setup.{channel}.end", len(setup.get(channel, []))
    for s in doc.get("steps", []):
        label = f"step {s.get('step')} ({s.get('actor')} {s.get('op')})"
        for channel in ("out", "adv"):
            for n, ev in enumerate(s.get(channel, [])):
                yield f"{label}.{channel}[{n}]", ev
            yield f"{label}.{channel}.end", len(s.get(channel, []))
    yield "steps.end", len(doc.get("steps", []))
    for n, tx in enumerate(doc.get("ledger", [])):
        yield f"ledger[{n}]", tx
    yield "ledger.end", len(doc.get("ledger", []))


def first_divergence(real: dict, ideal: dict) -> Divergence | None:
    """Locate the first differing event of two normalized traces."""
    a, b = normalize(real), normalize(ideal)
    if canonical_json(a) == canonical_json(b):
        return None
    for (where, x), (_, y) in zip(_events(a), _events(b)):
        if canonical_json(x) != canonical_json(y):
            return Divergence(where, x, y)
    return Divergence("<structure>", a, b)
