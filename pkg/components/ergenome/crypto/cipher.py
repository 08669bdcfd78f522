"""Salsa20/20 keystreams, encryption contexts and the per-save nonce ledger.

Every encrypted segment is addressed by (key, 64-bit nonce). The nonce is
encoded little-endian as the cipher's 8-byte IV; the keystream is XORed
with the plaintext, so ciphertexts are exactly as long as plaintexts.
"""

from __future__ import annotations

import struct
import threading
from typing import TYPE_CHECKING

from Crypto.Cipher import Salsa20

from ergenome.validation.exceptions import CryptoError, NonceReuseError

if TYPE_CHECKING:
    from ergenome.crypto.keys import SymmetricKey

STREAM_LIMIT = 2**70
_NONCE = struct.Struct("<Q")


def _new_cipher(key: SymmetricKey, nonce: int) -> Salsa20.Salsa20Cipher:
    if not 0 <= nonce < 2**64:
        raise CryptoError(f"Nonce {nonce} outside the 64-bit range")
    return Salsa20.new(key=key.material, nonce=_NONCE.pack(nonce))


def salsa20_keystream(key: SymmetricKey, nonce: int, length: int) -> bytes:
    """First ``length`` keystream bytes for (key, nonce).

    Raises:
        CryptoError: If ``length`` is negative or beyond the 2^70 byte budget
    """
    if not 0 <= length < STREAM_LIMIT:
        raise CryptoError(f"Keystream length {length} outside [0, 2^70)")
    return _new_cipher(key, nonce).encrypt(bytes(length))


def salsa20_xor(key: SymmetricKey, nonce: int, data: bytes) -> bytes:
    """Encrypt or decrypt ``data`` from the start of the (key, nonce) stream."""
    return _new_cipher(key, nonce).encrypt(data)


class EncryptionContext:
    """Sequential Salsa20 stream for one (key, nonce) pair.

    Encryption and decryption are the same XOR; each call continues where
    the previous one stopped. Contexts are single-owner.
    """

    __slots__ = ("_cipher", "key", "nonce", "stream_offset")

    def __init__(self, key: SymmetricKey, nonce: int) -> None:
        self.key = key
        self.nonce = nonce
        self.stream_offset = 0
        self._cipher = _new_cipher(key, nonce)

    def process(self, data: bytes) -> bytes:
        if self.stream_offset + len(data) > STREAM_LIMIT:
            raise CryptoError("Encryption context exceeded its 2^70 byte keystream")
        self.stream_offset += len(data)
        return self._cipher.encrypt(data)

    encrypt = process
    decrypt = process

    def skip(self, count: int) -> None:
        """Advance the stream by ``count`` bytes."""
        self.process(bytes(count))


def create_encryption_context(key: SymmetricKey, nonce: int) -> EncryptionContext:
    return EncryptionContext(key, nonce)


class NonceLedger:
    """Records every (key id, nonce) pair used by one save.

    Raises:
        NonceReuseError: On the second use of a pair
    """

    def __init__(self) -> None:
        self._used: set[tuple[bytes, int]] = set()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._used)

    def record(self, key: SymmetricKey, nonce: int) -> None:
        entry = (key.key_id, nonce)
        with self._lock:
            if entry in self._used:
                raise NonceReuseError(f"Nonce {nonce} reused under key {key.key_id.hex()}")
            self._used.add(entry)

    def encrypt(self, key: SymmetricKey, nonce: int, data: bytes) -> bytes:
        """Record (key, nonce) then encrypt ``data`` under it."""
        self.record(key, nonce)
        return salsa20_xor(key, nonce, data)
