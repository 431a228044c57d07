"""Real-world protocol: the supply-chain contract and the party machines."""

from .contract import ContractState, Genesis, Outcome, SupplyChainContract
from .machines import (
    ISSUER,
    REGISTRAR,
    ContractView,
    DeviceIssuerMachine,
    Network,
    PartyMachine,
    RegistrationAuthority,
)
from ..ledger import Credential

__all__ = [
    "ContractState", "ContractView", "Credential", "DeviceIssuerMachine", "Genesis", "ISSUER",
    "Network", "Outcome", "PartyMachine", "REGISTRAR", "RegistrationAuthority", "SupplyChainContract",
]
