"""Key portfolios and their hybrid sealing.

A sealed portfolio is::

    "ERKP" | version u16 | wrapped-key length u16 | RSA-OAEP(wrap key)
    | Salsa20(wrap key, nonce 0)(body | sha256(body))

The body lists the owner, the system key and one (individual id, key)
record per granted individual, sorted by id.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from Crypto.Cipher import PKCS1_OAEP
from Crypto.Hash import SHA256

from ergenome.codec import BinaryReader, BinaryWriter
from ergenome.crypto.cipher import salsa20_xor
from ergenome.crypto.keys import KEY_SIZE, SymmetricKey, generate_key, import_rsa_key
from ergenome.validation.exceptions import AuthorizationError, IndexFormatError

MAGIC = b"ERKP"
FORMAT_VERSION = 1
_DIGEST = 32


@dataclass(frozen=True)
class KeyPortfolio:
    """Keys one user holds: the system key and the keys of granted individuals."""

    user_id: str
    system_key: SymmetricKey
    individual_keys: dict[str, SymmetricKey] = field(default_factory=dict)

    def key_for(self, individual_id: str) -> SymmetricKey | None:
        return self.individual_keys.get(individual_id)

    def require_key(self, individual_id: str) -> SymmetricKey:
        """Key of ``individual_id``.

        Raises:
            AuthorizationError: If the portfolio does not hold it
        """
        key = self.individual_keys.get(individual_id)
        if key is None:
            raise AuthorizationError(
                f"Portfolio of {self.user_id} holds no key for individual {individual_id}"
            )
        return key

    def with_keys(self, keys: dict[str, SymmetricKey]) -> KeyPortfolio:
        """Copy of this portfolio with ``keys`` added."""
        return KeyPortfolio(self.user_id, self.system_key, {**self.individual_keys, **keys})


def _encode_body(portfolio: KeyPortfolio) -> bytes:
    writer = BinaryWriter()
    writer.text(portfolio.user_id)
    writer.raw(portfolio.system_key.material)
    writer.u32(len(portfolio.individual_keys))
    for individual_id in sorted(portfolio.individual_keys):
        writer.text(individual_id)
        writer.raw(portfolio.individual_keys[individual_id].material)
    return writer.getvalue()


def _decode_body(body: bytes) -> KeyPortfolio:
    reader = BinaryReader(body)
    user_id = reader.text()
    system_key = SymmetricKey(reader.raw(KEY_SIZE))
    keys = {}
    for _ in range(reader.u32()):
        individual_id = reader.text()
        keys[individual_id] = SymmetricKey(reader.raw(KEY_SIZE))
    return KeyPortfolio(user_id, system_key, keys)


def seal_portfolio(portfolio: KeyPortfolio, public_pem: bytes) -> bytes:
    """Encrypt ``portfolio`` so only the holder of the matching private key can open it."""
    rsa = PKCS1_OAEP.new(import_rsa_key(public_pem, private=False), hashAlgo=SHA256)
    wrap_key = generate_key()
    wrapped = rsa.encrypt(wrap_key.material)
    body = _encode_body(portfolio)

    writer = BinaryWriter()
    writer.raw(MAGIC)
    writer.u16(FORMAT_VERSION)
    writer.u16(len(wrapped))
    writer.raw(wrapped)
    writer.raw(salsa20_xor(wrap_key, 0, body + hashlib.sha256(body).digest()))
    return writer.getvalue()


def open_portfolio(blob: bytes, private_pem: bytes) -> KeyPortfolio:
    """Inverse of :func:`seal_portfolio`.

    Raises:
        AuthorizationError: If the blob is malformed, the private key does not
            match, or the integrity checksum fails
    """
    try:
        reader = BinaryReader(blob)
        if reader.raw(4) != MAGIC:
            raise AuthorizationError("Not a key portfolio (bad magic)")
        version = reader.u16()
        if version != FORMAT_VERSION:
            raise AuthorizationError(f"Unsupported portfolio version {version}")
        wrapped = reader.raw(reader.u16())
        sealed = reader.raw(reader.remaining)
    except IndexFormatError as e:
        raise AuthorizationError("Truncated key portfolio") from e

    rsa = PKCS1_OAEP.new(import_rsa_key(private_pem, private=True), hashAlgo=SHA256)
    try:
        wrap_key = SymmetricKey(rsa.decrypt(wrapped))
    except (ValueError, TypeError) as e:
        raise AuthorizationError("Portfolio was sealed for a different key") from e

    plain = salsa20_xor(wrap_key, 0, sealed)
    body, digest = plain[:-_DIGEST], plain[-_DIGEST:]
    if len(plain) < _DIGEST or hashlib.sha256(body).digest() != digest:
        raise AuthorizationError("Portfolio checksum mismatch")
    try:
        return _decode_body(body)
    except IndexFormatError as e:
        raise AuthorizationError("Malformed portfolio body") from e


def sealed_overhead(public_pem: bytes) -> int:
    """Bytes a sealed portfolio adds on top of its body."""
    modulus_bytes = import_rsa_key(public_pem, private=False).size_in_bytes()
    return len(MAGIC) + 2 + 2 + modulus_bytes + _DIGEST


def save_portfolio(portfolio: KeyPortfolio, public_pem: bytes, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(seal_portfolio(portfolio, public_pem))
    path.chmod(0o600)


def load_portfolio(path: Path, private_pem: bytes) -> KeyPortfolio:
    """Read and open a sealed portfolio file.

    Raises:
        AuthorizationError: If the file is missing or cannot be opened
    """
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise AuthorizationError(f"Cannot read portfolio {path}: {e}") from e
    return open_portfolio(blob, private_pem)
