"""Ideal signature functionality backed by Ed25519.

The functionality keeps the set of messages each honest signer has signed and
refuses to verify anything else under that signer's key, even when the
underlying scheme would accept it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Protocol

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from .errors import Reason, SignatureError

SECURITY_PARAMETER = 128


class SignatureScheme(Protocol):
    def keygen(self, seed: bytes) -> tuple[bytes, bytes]: ...

    def sign(self, sk: bytes, message: bytes) -> bytes: ...

    def verify(self, pk: bytes, message: bytes, sig: bytes) -> bool: ...


class Ed25519Scheme:
    def keygen(self, seed: bytes) -> tuple[bytes, bytes]:
        sk = Ed25519PrivateKey.from_private_bytes(seed)
        pk = sk.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
        return pk, seed

    def sign(self, sk: bytes, message: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(sk).sign(message)

    def verify(self, pk: bytes, message: bytes, sig: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(pk).verify(sig, message)
        except (InvalidSignature, ValueError):
            return False
        return True


@dataclass(frozen=True)
class KeyPair:
    pk: bytes
    sk: bytes


@dataclass
class SignerSession:
    signer: str
    keypair: KeyPair
    signed: set[bytes] = field(default_factory=set)

    @property
    def pk(self) -> bytes:
        return self.keypair.pk


class SignatureFunctionality:
    """One instance per world. Sessions are keyed by signer id."""

    def __init__(
        self,
        rng: random.Random,
        scheme: SignatureScheme | None = None,
        on_leak: Callable[[dict], None] | None = None,
    ):
        self._rng = rng
        self.scheme: SignatureScheme = scheme or Ed25519Scheme()
        self._sessions: dict[str, SignerSession] = {}
        self.corrupted: set[str] = set()
        self._phase_open = True
        self._on_leak = on_leak or (lambda event: None)

    # -- sessions -----------------------------------------------------------
    def keygen(self, signer: str, security_param: int = SECURITY_PARAMETER) -> SignerSession:
        if security_param != SECURITY_PARAMETER:
            raise ValueError(f"only {SECURITY_PARAMETER}-bit security is supported")
        if signer in self._sessions:
            raise SignatureError(Reason.DUPLICATE_SIGNER, signer)
        pk, sk = self.scheme.keygen(self._rng.randbytes(32))
        session = SignerSession(signer, KeyPair(pk, sk))
        self._sessions[signer] = session
        if signer in self.corrupted:
            self._leak_key(session)
        return session

    def session(self, signer: str) -> SignerSession | None:
        return self._sessions.get(signer)

    def pubkey(self, signer: str) -> bytes:
        session = self._sessions.get(signer)
        if session is None:
            raise SignatureError(Reason.NOT_SIGNER, signer)
        return session.pk

    # -- corruption ---------------------------------------------------------
    def corrupt(self, signer: str) -> bytes | None:
        """Static corruption; returns the secret key if the session exists already."""
        if not self._phase_open:
            raise SignatureError(Reason.CORRUPTION_CLOSED, signer)
        self.corrupted.add(signer)
        session = self._sessions.get(signer)
        if session is None:
            return None
        self._leak_key(session)
        return session.keypair.sk

    def close_corruption_phase(self) -> None:
        self._phase_open = False

    def _leak_key(self, session: SignerSession) -> None:
        self._on_leak({"ev": "sk", "party": session.signer, "sk": session.keypair.sk.hex()})

    # -- sign / verify ------------------------------------------------------
    def sign(self, signer: str, message: bytes) -> bytes:
        session = self._sessions.get(signer)
        if session is None:
            raise SignatureError(Reason.NOT_SIGNER, signer)
        sig = self.scheme.sign(session.keypair.sk, message)
        session.signed.add(message)
        return sig

    def verify(self, signer: str, pk: bytes, message: bytes, sig: bytes) -> bool:
        ok = self.scheme.verify(pk, message, sig)
        session = self._sessions.get(signer)
        if (
            ok
            and session is not None
            and signer not in self.corrupted
            and pk == session.pk
            and message not in session.signed
        ):
            return False
        return ok
