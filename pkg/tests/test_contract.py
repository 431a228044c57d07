from __future__ import annotations

import pytest

from supplytwin.domain import canonical_bytes
from supplytwin.errors import Reason
from supplytwin.harness import RealWorld, Scenario, shipped
from supplytwin.ledger import Ledger, Transaction
from supplytwin.real.contract import SupplyChainContract


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    w = RealWorld(Scenario.load(shipped("mozzarella")), ledger_path=tmp_path_factory.mktemp("c") / "l.jsonl")
    w.run()
    return w


def flip(hexstr: str, at: int = 0) -> str:
    raw = bytearray(bytes.fromhex(hexstr))
    raw[at] ^= 0x01
    return raw.hex()


def fresh(world) -> SupplyChainContract:
    return SupplyChainContract(world.contract.genesis, world.sig, world.scanner)


def test_signature_byte_mutations_rejected(world):
    entries = world.ledger.entries
    for n, tx in enumerate(entries):
        c = fresh(world)
        c.fold(entries[:n])
        for at in (0, 31, 63):
            assert c.apply(Transaction(tx.payload, flip(tx.sig, at), tx.cred)).reason is Reason.BAD_SIGNATURE
        bad_cred = dict(tx.cred, reg_sig=flip(tx.cred["reg_sig"], 5))
        assert c.apply(Transaction(tx.payload, tx.sig, bad_cred)).reason is Reason.BAD_CREDENTIAL
        assert c.apply(tx).accepted
    assert len(c.state.records) == len(world.records())


def test_payload_mutation_breaks_signature(world):
    tx = next(t for t in world.ledger.entries if t.op == "create")
    c = fresh(world)
    c.fold(world.ledger.entries[:world.ledger.entries.index(tx)])
    payload = dict(tx.payload, nonce=tx.payload["nonce"] + 1)
    assert c.apply(Transaction(payload, tx.sig, tx.cred)).reason is Reason.BAD_SIGNATURE


def test_replay_from_file_is_deterministic(world):
    replayed = Ledger.replay(world.ledger.path)
    a, b = fresh(world), fresh(world)
    a.fold(replayed.entries)
    b.fold(replayed.entries)
    assert a.state == b.state
    assert a.state.records == world.records()
    assert a.state.owners == world.owners() and a.state.states == world.states()


def test_malformed_checked_first(world):
    tx = world.ledger.entries[-1]
    out = fresh(world).apply(Transaction({"op": "create", "args": {}}, "zz", tx.cred))
    assert out.reason is Reason.MALFORMED and not out.accepted


def test_enroll_only_from_registrar(world):
    enroll = next(t for t in world.ledger.entries if t.op == "enroll")
    member = next(t for t in world.ledger.entries if t.cred["party"] == "farm")
    payload = dict(enroll.payload, args=dict(enroll.args, party="sybil"), nonce=999)
    sig = world.sig.sign("farm", canonical_bytes(payload)).hex()
    c = fresh(world)
    c.fold(world.ledger.entries)
    out = c.apply(Transaction(payload, sig, member.cred))
    assert out.reason is Reason.BAD_CREDENTIAL
    assert "sybil" not in c.state.members


def test_state_check_on_fresh_contract(world):
    # Without the earlier history the same signed command refers to unknown assets.
    tx = next(t for t in world.ledger.entries if t.op == "handover")
    c = fresh(world)
    c.fold([t for t in world.ledger.entries if t.op == "enroll"])
    assert c.apply(tx).reason is Reason.UNKNOWN_ASSET
