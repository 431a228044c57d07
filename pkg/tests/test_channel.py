from __future__ import annotations

import pytest

from supplytwin.channel import SecureChannel
from supplytwin.errors import ChannelError, Reason


def setup(corrupted=()):
    leaks, inbox = [], []
    ch = SecureChannel(corrupted, on_leak=leaks.append)
    for p in ("alice", "bob", "mallory"):
        ch.attach(p, lambda env, p=p: inbox.append((p, env.message())))
    return ch, leaks, inbox


def test_fifo_delivery():
    ch, _, inbox = setup()
    for n in range(5):
        ch.send("alice", "bob", b'{"n":%d}' % n)
    assert ch.pending == 5
    assert ch.pump() == 5
    assert [m["n"] for _, m in inbox] == list(range(5))


def test_honest_traffic_is_private():
    ch, leaks, _ = setup({"mallory"})
    env = ch.send("alice", "bob", b'{"secret":1}')
    assert not env.visible_to_adversary
    assert leaks == []


def test_corrupted_endpoint_sees_body():
    ch, leaks, _ = setup({"mallory"})
    ch.send("alice", "mallory", b'{"x":1}')
    assert leaks == [{"ev": "smt", "from": "alice", "to": "mallory", "body": {"x": 1}}]


def test_unknown_party():
    ch, _, _ = setup()
    with pytest.raises(ChannelError) as exc:
        ch.send("alice", "zed", b"{}")
    assert exc.value.reason is Reason.UNKNOWN_PARTY


def test_replies_during_delivery_are_pumped():
    ch = SecureChannel()
    seen = []
    ch.attach("a", lambda env: seen.append("a"))
    ch.attach("b", lambda env: (seen.append("b"), ch.send("b", "a", b"{}")))
    ch.send("a", "b", b"{}")
    assert ch.pump() == 2
    assert seen == ["b", "a"]
