from __future__ import annotations

import json
import random

import pytest

from supplytwin.errors import LedgerRejected, Reason
from supplytwin.harness import RealWorld, Scenario, shipped
from supplytwin.ledger import InternalList, Ledger, Transaction


@pytest.fixture(scope="module")
def mozzarella_ledger(tmp_path_factory):
    path = tmp_path_factory.mktemp("ledger") / "ledger.jsonl"
    world = RealWorld(Scenario.load(shipped("mozzarella")), ledger_path=path)
    world.run()
    return world, path


def test_duplicates_rejected(mozzarella_ledger):
    world, _ = mozzarella_ledger
    entries, rng = list(world.ledger.entries), random.Random(2)
    fresh = Ledger()
    for tx in entries:
        fresh.submit(tx, "x")
    for _ in range(1000):
        tx = rng.choice(entries)
        resigned = Transaction(tx.payload, "00" * 64, tx.cred)
        with pytest.raises(LedgerRejected) as exc:
            fresh.submit(rng.choice([tx, resigned]), "mallory")
        assert exc.value.reason is Reason.DUPLICATE
    assert fresh.entries == entries


@pytest.mark.parametrize("payload", [
    {"op": "nope", "args": {}, "nonce": 1},
    {"op": "produce", "args": {"area": "field"}, "nonce": 1},
    {"op": "produce", "args": {"area": "A" + "0" * 32, "category": "C" + "0" * 32}},
    "not a dict",
])
def test_malformed_rejected(mozzarella_ledger, payload):
    tx = Transaction(payload, "00", mozzarella_ledger[0].ledger.entries[0].cred)
    with pytest.raises(LedgerRejected) as exc:
        Ledger().submit(tx, "x")
    assert exc.value.reason is Reason.MALFORMED


def test_file_has_genesis_and_replays(mozzarella_ledger):
    world, path = mozzarella_ledger
    lines = path.read_text().splitlines()
    assert json.loads(lines[0]) == {"genesis": world.contract.genesis.to_json()}
    assert len(lines) == len(world.ledger.entries) + 1
    replayed = Ledger.replay(path)
    assert replayed.entries == world.ledger.entries


def test_replay_refuses_duplicate_lines(mozzarella_ledger, tmp_path):
    _, path = mozzarella_ledger
    lines = path.read_text().splitlines()
    bad = tmp_path / "dup.jsonl"
    bad.write_text("\n".join(lines + [lines[-1]]) + "\n")
    with pytest.raises(LedgerRejected):
        Ledger.replay(bad)


def test_reads_leak_only_for_corrupted_readers():
    leaks = []
    ledger = InternalList(corrupted={"mallory"}, on_leak=leaks.append)
    assert ledger.read("alice") == []
    ledger.read("mallory")
    assert leaks == [{"ev": "ledger_read", "party": "mallory", "length": 0}]


def test_read_returns_snapshot(mozzarella_ledger):
    ledger = mozzarella_ledger[0].ledger
    snap = ledger.read("farm")
    snap.clear()
    assert len(ledger.entries) > 0
