"""Symmetric keys and user RSA keypairs."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from Crypto.PublicKey import RSA
from Crypto.Random import get_random_bytes

from ergenome.validation.exceptions import AuthorizationError, CryptoError

KEY_SIZE = 32
RSA_BITS = 2048


@dataclass(frozen=True, slots=True)
class SymmetricKey:
    """A 256-bit secret key.

    Raises:
        CryptoError: If ``material`` is not exactly 32 bytes
    """

    material: bytes

    def __post_init__(self) -> None:
        if len(self.material) != KEY_SIZE:
            raise CryptoError(f"Symmetric keys are {KEY_SIZE} bytes, got {len(self.material)}")

    def __repr__(self) -> str:
        return f"SymmetricKey(key_id={self.key_id.hex()})"

    @property
    def key_id(self) -> bytes:
        """First 8 bytes of the SHA-256 of the key; safe to log and to ledger."""
        return hashlib.sha256(self.material).digest()[:8]

    def hex(self) -> str:
        return self.material.hex()

    @classmethod
    def from_hex(cls, value: str) -> SymmetricKey:
        try:
            return cls(bytes.fromhex(value))
        except ValueError as e:
            raise CryptoError("Key is not valid hexadecimal") from e


def generate_key() -> SymmetricKey:
    """Fresh key from the operating system's secure random source."""
    return SymmetricKey(get_random_bytes(KEY_SIZE))


@dataclass(frozen=True, slots=True)
class UserKeyPair:
    """PEM-encoded RSA keypair of one database user."""

    public_pem: bytes
    private_pem: bytes


def generate_user_keypair(bits: int = RSA_BITS) -> UserKeyPair:
    key = RSA.generate(bits)
    return UserKeyPair(
        public_pem=key.publickey().export_key(format="PEM"),
        private_pem=key.export_key(format="PEM"),
    )


def import_rsa_key(pem: bytes, *, private: bool) -> RSA.RsaKey:
    """Parse a PEM key, checking it is the expected half of the pair.

    Raises:
        AuthorizationError: If the data is not an RSA key of that kind
    """
    try:
        key = RSA.import_key(pem)
    except (ValueError, IndexError, TypeError) as e:
        raise AuthorizationError("Key file is not a valid RSA key") from e
    if private and not key.has_private():
        raise AuthorizationError("Expected a private key, got a public key")
    return key


def write_keypair(pair: UserKeyPair, directory: Path, user_id: str) -> tuple[Path, Path]:
    """Write ``<user>.pub.pem`` and ``<user>.pem`` (owner-only) into ``directory``."""
    directory.mkdir(parents=True, exist_ok=True)
    public_path = directory / f"{user_id}.pub.pem"
    private_path = directory / f"{user_id}.pem"
    public_path.write_bytes(pair.public_pem)
    private_path.write_bytes(pair.private_pem)
    private_path.chmod(0o600)
    return public_path, private_path
