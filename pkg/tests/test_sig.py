from __future__ import annotations

import random

import pytest

from supplytwin.errors import Reason, SignatureError
from supplytwin.sig import SignatureFunctionality


def make(seed: int = 0, leaks=None) -> SignatureFunctionality:
    return SignatureFunctionality(random.Random(f"{seed}:sig"), on_leak=leaks)


def test_sign_then_verify():
    f = make()
    pk = f.keygen("alice").pk
    sig = f.sign("alice", b"hello")
    assert f.verify("alice", pk, b"hello", sig)
    assert not f.verify("alice", pk, b"hellO", sig)


def test_keygen_is_seeded():
    assert make(3).keygen("a").pk == make(3).keygen("a").pk
    assert make(3).keygen("a").pk != make(4).keygen("a").pk


def test_duplicate_signer_and_unknown_signer():
    f = make()
    f.keygen("alice")
    with pytest.raises(SignatureError) as exc:
        f.keygen("alice")
    assert exc.value.reason is Reason.DUPLICATE_SIGNER
    with pytest.raises(SignatureError) as exc:
        f.sign("bob", b"x")
    assert exc.value.reason is Reason.NOT_SIGNER


def test_gate_rejects_valid_signature_never_issued():
    # A scheme-valid signature on an unsigned message is refused for an honest signer.
    f = make()
    session = f.keygen("alice")
    forged = f.scheme.sign(session.keypair.sk, b"never signed")
    assert f.scheme.verify(session.pk, b"never signed", forged)
    assert not f.verify("alice", session.pk, b"never signed", forged)


def test_existential_forgery_smoke():
    f, rng = make(), random.Random(9)
    pk = f.keygen("alice").pk
    f.keygen("mallory")
    for n in range(1000):
        msg = rng.randbytes(rng.randrange(1, 64))
        candidate = f.sign("mallory", msg) if n % 2 else rng.randbytes(64)
        assert not f.verify("alice", pk, msg, candidate)


def test_corrupt_signer_leaks_key_and_is_ungated():
    leaks = []
    f = make(leaks=leaks.append)
    f.corrupt("mallory")
    session = f.keygen("mallory")
    assert leaks == [{"ev": "sk", "party": "mallory", "sk": session.keypair.sk.hex()}]
    own = f.scheme.sign(session.keypair.sk, b"offline")
    assert f.verify("mallory", session.pk, b"offline", own)


def test_corruption_phase_closes():
    f = make()
    f.close_corruption_phase()
    with pytest.raises(SignatureError) as exc:
        f.corrupt("late")
    assert exc.value.reason is Reason.CORRUPTION_CLOSED


def test_security_parameter_fixed():
    with pytest.raises(ValueError):
        make().keygen("a", security_param=64)
