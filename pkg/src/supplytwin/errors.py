"""Reject reasons and exception types shared by every layer.

Both worlds speak the same reason vocabulary so that a rejection in the ideal
functionality and a rejection by the contract produce identical outputs.
"""

from __future__ import annotations

from enum import Enum


class Reason(str, Enum):
    # registration
    NOT_REGISTERED = "NotRegistered"
    ALREADY_REGISTERED = "AlreadyRegistered"
    WRONG_ROLE = "WrongRole"
    # existence, ownership and kind
    UNKNOWN_ASSET = "UnknownAsset"
    NOT_OWNER = "NotOwner"
    NOT_AREA_OWNER = "NotAreaOwner"
    WRONG_ASSET_KIND = "WrongAssetKind"
    NOT_A_BATCH = "NotABatch"
    DUPLICATE_AREA = "DuplicateArea"
    DUPLICATE_ITEM = "DuplicateItem"
    DUPLICATE_BATCH = "DuplicateBatch"
    # lifecycle
    INPUT_NOT_INTACT = "InputNotIntact"
    NOT_INTACT = "NotIntact"
    BATCH_NOT_INTACT = "BatchNotIntact"
    RECIPIENT_NOT_AUTHORIZED = "RecipientNotAuthorized"
    NOT_DESIGNEE = "NotDesignee"
    NOT_IN_TRANSIT = "NotInTransit"
    ILLEGAL_TRANSITION = "IllegalTransition"
    NOT_ORIGINAL_TRAINER = "NotOriginalTrainer"
    DEVICE_INVALID = "DeviceInvalid"
    # authentication and format
    BAD_CREDENTIAL = "BadCredential"
    BAD_SIGNATURE = "BadSignature"
    MALFORMED = "Malformed"
    DUPLICATE = "Duplicate"
    # fingerprint scanner
    NOT_ISSUER = "NotIssuer"
    NOT_DEVICE_OWNER = "NotDeviceOwner"
    DEVICE_WITHDRAWN = "DeviceWithdrawn"
    UNKNOWN_DEVICE = "UnknownDevice"
    NO_FINGERPRINT = "NoFingerprint"
    ITEM_CONSUMED = "ItemConsumed"
    UNKNOWN_ITEM = "UnknownItem"
    NOT_ORIGINAL_ISSUER = "NotOriginalIssuer"
    # signatures, ids, channels, registrar
    DUPLICATE_SIGNER = "DuplicateSigner"
    NOT_SIGNER = "NotSigner"
    CORRUPTION_CLOSED = "CorruptionPhaseClosed"
    COLLISION_EXHAUSTED = "CollisionExhausted"
    UNKNOWN_PARTY = "UnknownParty"
    ALREADY_INITIALIZED = "AlreadyInitialized"

    def __str__(self) -> str:
        return self.value


class SupplyTwinError(Exception):
    """Base error; ``reason`` is a :class:`Reason` or a free-form code."""

    def __init__(self, reason: Reason | str, detail: str = ""):
        self.reason = Reason(reason) if isinstance(reason, str) and reason in _VALUES else reason
        super().__init__(f"{reason}: {detail}" if detail else str(reason))


_VALUES = {r.value for r in Reason}


class TransitionError(SupplyTwinError):
    """Illegal lifecycle step or non-owner write."""


class SignatureError(SupplyTwinError):
    pass


class LedgerRejected(SupplyTwinError):
    """Transaction failed format validation or replay protection."""


class ChannelError(SupplyTwinError):
    pass


class ScannerError(SupplyTwinError):
    pass


class SupplyChainRejected(SupplyTwinError):
    """A supply-chain command was refused."""


class RegistrarError(SupplyTwinError):
    pass


class ScenarioError(SupplyTwinError):
    """Scenario file failed schema or semantic validation."""

    def __init__(self, detail: str):
        super().__init__("ScenarioInvalid", detail)
