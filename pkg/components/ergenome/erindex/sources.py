"""Factor sources: in-memory factorizations and lazily decrypted stored ones."""

from __future__ import annotations

import threading
from typing import TYPE_CHECKING

import numpy as np

from ergenome.codec import BinaryReader
from ergenome.crypto import salsa20_xor
from ergenome.erindex.blocks import (
    FactorizationHeader,
    decode_block,
    decode_factorization_header,
    group_mismatch_only,
)
from ergenome.logging import get_logger
from ergenome.rlz import iter_factor_symbols
from ergenome.validation.core import validate_range
from ergenome.validation.exceptions import AuthorizationError, CorruptionError, IndexFormatError

if TYPE_CHECKING:
    from collections.abc import Iterator

    from numpy.typing import NDArray

    from ergenome.crypto import SymmetricKey
    from ergenome.ebtree import ByteLRUCache
    from ergenome.erindex.protocol import FactorSource
    from ergenome.fm import FMIndex
    from ergenome.rlz import Factor, Factorization

logger = get_logger(__name__)


class MemoryFactorSource:
    """Factor source over a :class:`~ergenome.rlz.Factorization` held in memory."""

    def __init__(self, fz: Factorization) -> None:
        self.individual_id = fz.individual_id
        self.factorization = fz
        self._mismatch_only = group_mismatch_only(fz)

    @property
    def factor_count(self) -> int:
        return self.factorization.factor_count

    @property
    def source_length(self) -> int:
        return self.factorization.source_length

    def factor(self, index: int) -> Factor:
        if not 0 <= index < self.factor_count:
            raise CorruptionError(f"Factor {index} outside {self.individual_id}'s factorization")
        return self.factorization.factors[index]

    def factor_start(self, index: int) -> int:
        if not 0 <= index < self.factor_count:
            raise CorruptionError(f"Factor {index} outside {self.individual_id}'s factorization")
        return int(self.factorization.starts[index])

    def locate_position(self, position: int) -> tuple[int, int]:
        return self.factorization.locate_position(position)

    def mismatch_only_ids(self, symbol: str | None = None) -> list[int]:
        if symbol is None:
            return self.factorization.mismatch_only_ids()
        return list(self._mismatch_only.get(symbol, ()))


class EncryptedFactorSource:
    """Factor source over one stored factorization section.

    Section layout: header length varint, header ciphertext (individual key,
    nonce 0), then block ciphertexts (individual key, nonce block + 1).
    The header is decrypted on first use, each block when first touched;
    ``start_rows`` (the reference's start-row table) restores each factor's
    ``sai_rev_start`` from its stored reference position.
    """

    def __init__(
        self,
        individual_id: str,
        section: memoryview,
        key: SymmetricKey,
        cache: ByteLRUCache,
        start_rows: NDArray[np.int64],
    ) -> None:
        self.individual_id = individual_id
        self._start_rows = start_rows
        self._section = section
        self._key = key
        self._cache = cache
        self._header: FactorizationHeader | None = None
        self._blocks_base = 0
        self._lock = threading.Lock()

    @property
    def header(self) -> FactorizationHeader:
        if self._header is None:
            with self._lock:
                if self._header is None:
                    reader = BinaryReader(self._section)
                    plain = salsa20_xor(self._key, 0, reader.raw(reader.varint()))
                    try:
                        header = decode_factorization_header(plain)
                    except IndexFormatError as e:
                        raise AuthorizationError(
                            f"Cannot decrypt the factorization of {self.individual_id}"
                        ) from e
                    self._blocks_base = reader.position
                    self._header = header
                    logger.debug(
                        "Factorization header decrypted",
                        individual_id=self.individual_id,
                        factor_count=header.factor_count,
                    )
        return self._header

    @property
    def factor_count(self) -> int:
        return self.header.factor_count

    @property
    def source_length(self) -> int:
        return self.header.source_length

    def mismatch_only_ids(self, symbol: str | None = None) -> list[int]:
        return self.header.mismatch_only_ids(symbol)

    def _block(self, number: int) -> tuple[list[Factor], NDArray[np.int64]]:
        cache_key = ("block", self.individual_id, number)
        cached = self._cache.get(cache_key)
        if cached is not None:
            return cached  # type: ignore[return-value]
        header = self.header
        start = self._blocks_base + int(header.block_offsets[number])
        end = self._blocks_base + int(header.block_offsets[number + 1])
        plain = salsa20_xor(self._key, number + 1, bytes(self._section[start:end]))
        try:
            factors = decode_block(
                plain,
                header.block_factor_count(number),
                int(header.block_starts[number]),
                self._start_rows,
            )
        except (IndexFormatError, CorruptionError) as e:
            raise CorruptionError(f"Block {number} of {self.individual_id} is damaged") from e
        starts = np.zeros(len(factors), dtype=np.int64)
        np.cumsum(np.asarray([f.length for f in factors[:-1]], dtype=np.int64), out=starts[1:])
        starts += header.block_starts[number]
        self._cache.put(cache_key, (factors, starts), 96 * len(factors) + 64)
        logger.debug("Factor block decrypted", individual_id=self.individual_id, block=number)
        return factors, starts

    def _check_index(self, index: int) -> FactorizationHeader:
        header = self.header
        if not 0 <= index < header.factor_count:
            raise CorruptionError(f"Factor {index} outside {self.individual_id}'s factorization")
        return header

    def factor(self, index: int) -> Factor:
        header = self._check_index(index)
        factors, _ = self._block(index // header.block_size)
        return factors[index % header.block_size]

    def factor_start(self, index: int) -> int:
        header = self._check_index(index)
        _, starts = self._block(index // header.block_size)
        return int(starts[index % header.block_size])

    def locate_position(self, position: int) -> tuple[int, int]:
        header = self.header
        if not 0 <= position < header.source_length:
            raise CorruptionError(f"Position {position} outside {self.individual_id}'s sequence")
        number = int(np.searchsorted(header.block_starts, position, side="right")) - 1
        _, starts = self._block(number)
        within = int(np.searchsorted(starts, position, side="right")) - 1
        return number * header.block_size + within, position - int(starts[within])


def iter_source_text(source: FactorSource, fm_rev: FMIndex, start: int) -> Iterator[str]:
    """Yield the individual sequence from ``start`` onward, one factor at a time."""
    if start >= source.source_length:
        return
    index, offset = source.locate_position(start)
    for factor_index in range(index, source.factor_count):
        factor = source.factor(factor_index)
        yield from iter_factor_symbols(fm_rev, factor.sai_rev_start, factor.length, factor.mc, offset)
        offset = 0


def matches_at(source: FactorSource, fm_rev: FMIndex, start: int, expected: str) -> bool:
    """True iff the sequence holds ``expected`` at ``start``; stops at the first mismatch."""
    if not expected:
        return True
    if start < 0 or start + len(expected) > source.source_length:
        return False
    for symbol, wanted in zip(iter_source_text(source, fm_rev, start), expected, strict=False):
        if symbol != wanted:
            return False
    return True


def extract_from_source(source: FactorSource, fm_rev: FMIndex, start: int, length: int) -> str:
    """``S[start : start + length]`` of the source's individual.

    Raises:
        ValidationError: If the range is outside the sequence
    """
    validate_range(start, length, source.source_length)
    out: list[str] = []
    if length:
        for symbol in iter_source_text(source, fm_rev, start):
            out.append(symbol)
            if len(out) == length:
                break
    return "".join(out)
