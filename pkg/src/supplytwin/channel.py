"""Secure message transmission between parties.

Messages queue up and are released in FIFO order when the scheduler pumps the
channel. The adversary sees a message body only when an endpoint is corrupted.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import ChannelError, Reason


@dataclass
class Envelope:
    sender: str
    recipient: str
    body: bytes
    visible_to_adversary: bool
    delivered: bool = False

    def message(self) -> dict:
        return json.loads(self.body)


Handler = Callable[[Envelope], None]


class SecureChannel:
    def __init__(self, corrupted: Iterable[str] = (), on_leak: Callable[[dict], None] | None = None):
        self.corrupted = set(corrupted)
        self._handlers: dict[str, Handler] = {}
        self._queue: deque[Envelope] = deque()
        self._on_leak = on_leak or (lambda event: None)

    def attach(self, party: str, handler: Handler) -> None:
        self._handlers[party] = handler

    @property
    def pending(self) -> int:
        return len(self._queue)

    def send(self, sender: str, recipient: str, body: bytes) -> Envelope:
        for party in (sender, recipient):
            if party not in self._handlers:
                raise ChannelError(Reason.UNKNOWN_PARTY, party)
        visible = sender in self.corrupted or recipient in self.corrupted
        envelope = Envelope(sender, recipient, body, visible)
        if visible:
            self._on_leak({"ev": "smt", "from": sender, "to": recipient, "body": envelope.message()})
        self._queue.append(envelope)
        return envelope

    def deliver_next(self) -> Envelope | None:
        if not self._queue:
            return None
        envelope = self._queue.popleft()
        envelope.delivered = True
        self._handlers[envelope.recipient](envelope)
        return envelope

    def pump(self) -> int:
        """Deliver until quiescent, including replies queued during delivery."""
        count = 0
        while self.deliver_next() is not None:
            count += 1
        return count
