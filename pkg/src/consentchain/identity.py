"""Agent identities and Ed25519 key handling.

Identities are registered on chain by the regulatory authority; the address is
the digest of the public key. Private keys never appear in any serialized
structure. Key derivation is deterministic from (seed, display_id) so the same
scenario always produces the same chain bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .codec import Reader, Writer, digest


class Role(Enum):
    USER = 1
    FITNESS_PROVIDER = 2
    REQUESTER = 3
    REGULATORY_AUTHORITY = 4
    CONTRACT_ENGINE = 5


@dataclass(frozen=True)
class AgentIdentity:
    """Registered principal: role, verification key, address, readable id."""

    role: Role
    public_key: bytes
    address: bytes
    display_id: str

    def encode(self) -> bytes:
        w = Writer()
        w.u8(self.role.value)
        w.bytes(self.public_key)
        w.bytes(self.address)
        w.text(self.display_id)
        return w.getvalue()

    @staticmethod
    def decode(r: Reader) -> "AgentIdentity":
        role = Role(r.u8())
        public_key = r.bytes()
        address = r.bytes()
        display_id = r.text()
        return AgentIdentity(role, public_key, address, display_id)


def derive_private_key(seed: int, display_id: str) -> Ed25519PrivateKey:
    """Deterministic per-agent key: digest of run seed and display id."""
    material = digest(seed.to_bytes(8, "big") + b"/" + display_id.encode("utf-8"))
    return Ed25519PrivateKey.from_private_bytes(material)


def public_bytes(key: Ed25519PrivateKey) -> bytes:
    from cryptography.hazmat.primitives.serialization import (
        Encoding,
        PublicFormat,
    )

    return key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)


def make_identity(role: Role, key: Ed25519PrivateKey, display_id: str) -> AgentIdentity:
    pub = public_bytes(key)
    return AgentIdentity(role=role, public_key=pub, address=digest(pub), display_id=display_id)


def sign(key: Ed25519PrivateKey, message: bytes) -> bytes:
    return key.sign(message)


def verify(public_key: bytes, signature: bytes, message: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


@dataclass
class Keypair:
    """An identity together with its signing key (simulator-side only)."""

    identity: AgentIdentity
    key: Ed25519PrivateKey

    @staticmethod
    def derive(seed: int, display_id: str, role: Role) -> "Keypair":
        key = derive_private_key(seed, display_id)
        return Keypair(make_identity(role, key, display_id), key)

    def sign(self, message: bytes) -> bytes:
        return sign(self.key, message)
