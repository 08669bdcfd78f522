"""Plaintext layout of factorization headers and factor blocks.

A block stores, for each of its factors, only the length, the mismatch
symbol and, for referential factors, where the referential part starts in
the reference (``tp``)::

    packed lengths | packed symbol codes | drift section

Symbol codes index ``ACGTN``, so a block without N mismatches spends two
bits per symbol. The drift section codes each ``tp`` against the factor's
own text position: the diagonal ``tp - start`` only moves at an insertion
or deletion, so consecutive diagonals differ by little or nothing::

    first diagonal svarint | width u8 | residual codes | escaped residuals varint...

A residual is the diagonal minus the anchor, zigzag-coded at the width that
makes the section smallest. The anchor moves to a factor's diagonal when its
residual is within ``DRIFT_WINDOW`` or its referential part is at least
``DRIFT_WINDOW`` long, so short chance matches elsewhere in the reference do
not move it. The all-ones code escapes a residual too wide for it, which
then follows as a varint. The reader maps ``tp`` back to ``sai_rev_start``
through the reference's start-row table.

The number of factors in a block follows from the header (every block but
the last is full).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ergenome.codec import (
    BinaryReader,
    BinaryWriter,
    pack_uints,
    packed_size,
    unpack_uints,
    unzigzag,
    zigzag,
)
from ergenome.rlz import Factor
from ergenome.validation.exceptions import (
    ContractViolationError,
    CorruptionError,
    IndexFormatError,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray

    from ergenome.rlz import Factorization

MC_ALPHABET = "ACGTN"
DRIFT_WINDOW = 32
_MC_CODE = {symbol: code for code, symbol in enumerate(MC_ALPHABET)}
_HEADER_CHECK = 8


def _varint_size(value: int) -> int:
    return max(1, -(-value.bit_length() // 7))


def _drift_width(codes: Sequence[int]) -> int:
    """Code width minimising packed codes plus escaped varints."""
    if not any(codes):
        return 0
    sizes = [_varint_size(code) * 8 for code in codes]
    best_width, best_cost = 64, math.inf
    for width in range(1, min(max(codes).bit_length() + 1, 64) + 1):
        escape = (1 << width) - 1
        cost = len(codes) * width + sum(
            size for code, size in zip(codes, sizes, strict=True) if code >= escape
        )
        if cost < best_cost:
            best_width, best_cost = width, cost
    return best_width


def _moves_anchor(residual: int, ref_length: int) -> bool:
    return abs(residual) <= DRIFT_WINDOW or ref_length >= DRIFT_WINDOW


def _write_drift(
    writer: BinaryWriter, diagonals: Sequence[int], ref_lengths: Sequence[int]
) -> None:
    if not diagonals:
        return
    anchor = diagonals[0]
    writer.svarint(anchor)
    codes: list[int] = []
    for diagonal, ref_length in zip(diagonals, ref_lengths, strict=True):
        residual = diagonal - anchor
        codes.append(zigzag(residual))
        if _moves_anchor(residual, ref_length):
            anchor = diagonal
    width = _drift_width(codes)
    escape = (1 << width) - 1
    writer.u8(width)
    writer.raw(pack_uints([min(code, escape) for code in codes], width))
    for code in codes:
        if width and code >= escape:
            writer.varint(code)


def _read_drift(reader: BinaryReader, ref_lengths: Sequence[int]) -> list[int]:
    count = len(ref_lengths)
    if count == 0:
        return []
    anchor = reader.svarint()
    width = reader.u8()
    if width > 64:
        raise IndexFormatError(f"Invalid drift code width {width}")
    escape = (1 << width) - 1
    diagonals: list[int] = []
    codes = unpack_uints(reader.raw(packed_size(count, width)), count, width).tolist()
    for code, ref_length in zip(codes, ref_lengths, strict=True):
        residual = unzigzag(reader.varint() if width and code == escape else code)
        diagonal = anchor + residual
        if _moves_anchor(residual, ref_length):
            anchor = diagonal
        diagonals.append(diagonal)
    return diagonals


def encode_block(factors: Sequence[Factor], block_start: int) -> bytes:
    """Pack the stored fields of ``factors``, the first starting at text position ``block_start``.

    Raises:
        CorruptionError: If a mismatch symbol is outside ``ACGTN``
        ContractViolationError: If a referential factor has no ``tp``
    """
    try:
        codes = [_MC_CODE[f.mc] for f in factors]
    except KeyError as e:
        raise CorruptionError(f"Mismatch symbol {e.args[0]!r} cannot be stored") from e
    diagonals: list[int] = []
    ref_lengths: list[int] = []
    start = block_start
    for factor in factors:
        if not factor.is_mismatch_only:
            if factor.tp is None:
                raise ContractViolationError(
                    f"Referential factor at text position {start} has no reference position"
                )
            diagonals.append(factor.tp - start)
            ref_lengths.append(factor.ref_length)
        start += factor.length
    writer = BinaryWriter()
    writer.packed([f.length for f in factors])
    writer.packed(codes)
    _write_drift(writer, diagonals, ref_lengths)
    return writer.getvalue()


def decode_block(
    data: bytes, count: int, block_start: int, start_rows: NDArray[np.int64]
) -> list[Factor]:
    """Inverse of :func:`encode_block`; ``start_rows`` is the reference's start-row table.

    Raises:
        CorruptionError: On a symbol code or reference position that cannot occur
        IndexFormatError: On truncated data
    """
    reader = BinaryReader(data)
    lengths = reader.packed(count).tolist()
    codes = reader.packed(count).tolist()
    try:
        symbols = [MC_ALPHABET[code] for code in codes]
    except IndexError as e:
        raise CorruptionError("Invalid mismatch symbol code in factor block") from e
    diagonals = iter(_read_drift(reader, [length - 1 for length in lengths if length > 1]))

    text_len = start_rows.size - 1
    factors: list[Factor] = []
    start = block_start
    for length, symbol in zip(lengths, symbols, strict=True):
        if length == 0:
            raise CorruptionError("Zero-length factor in factor block")
        if length == 1:
            factors.append(Factor(sai_rev_start=0, length=1, mc=symbol))
        else:
            tp = start + next(diagonals)
            if not 0 <= tp <= text_len - (length - 1):
                raise CorruptionError(f"Reference position {tp} outside the reference")
            factors.append(
                Factor(sai_rev_start=int(start_rows[tp]), length=length, mc=symbol, tp=tp)
            )
        start += length
    return factors


@dataclass(frozen=True, slots=True)
class FactorizationHeader:
    """Per-individual directory of a stored factorization.

    Attributes:
        factor_count: Number of factors
        block_size: Factors per block
        source_length: Length of the individual sequence
        block_offsets: Byte offset of each block after the header, plus the end
        block_starts: Text position of the first symbol of each block
        mismatch_only_by_symbol: Ids of factors of length 1, per mismatch symbol
    """

    factor_count: int
    block_size: int
    source_length: int
    block_offsets: NDArray[np.int64]
    block_starts: NDArray[np.int64]
    mismatch_only_by_symbol: dict[str, tuple[int, ...]]

    @property
    def block_count(self) -> int:
        return len(self.block_starts)

    @property
    def mismatch_only(self) -> tuple[int, ...]:
        return tuple(sorted(i for ids in self.mismatch_only_by_symbol.values() for i in ids))

    def mismatch_only_ids(self, symbol: str | None = None) -> list[int]:
        if symbol is None:
            return list(self.mismatch_only)
        return list(self.mismatch_only_by_symbol.get(symbol, ()))

    def block_factor_count(self, number: int) -> int:
        if number < self.block_count - 1:
            return self.block_size
        return self.factor_count - self.block_size * (self.block_count - 1)


def group_mismatch_only(fz: Factorization) -> dict[str, tuple[int, ...]]:
    """Ids of the mismatch-only factors of ``fz`` per symbol, ascending."""
    grouped: dict[str, list[int]] = {}
    for factor_id in fz.mismatch_only_ids():
        grouped.setdefault(fz.factors[factor_id].mc, []).append(factor_id)
    return {symbol: tuple(ids) for symbol, ids in grouped.items()}


def encode_blocks(fz: Factorization) -> list[bytes]:
    """Every block of ``fz``, in order."""
    return [
        encode_block(fz.block(number), int(fz.starts[number * fz.block_size]))
        for number in range(fz.block_count)
    ]


def header_for(fz: Factorization, block_lengths: Sequence[int]) -> FactorizationHeader:
    offsets = np.zeros(len(block_lengths) + 1, dtype=np.int64)
    np.cumsum(np.asarray(block_lengths, dtype=np.int64), out=offsets[1:])
    return FactorizationHeader(
        factor_count=fz.factor_count,
        block_size=fz.block_size,
        source_length=fz.source_length,
        block_offsets=offsets,
        block_starts=fz.starts[:: fz.block_size].copy(),
        mismatch_only_by_symbol=group_mismatch_only(fz),
    )


def encode_factorization_header(header: FactorizationHeader) -> bytes:
    """Varint counts, packed block sizes and start gaps, mismatch-only ids per symbol, check."""
    writer = BinaryWriter()
    writer.varint(header.factor_count)
    writer.varint(header.block_size)
    writer.varint(header.source_length)
    writer.packed(np.diff(header.block_offsets))
    writer.packed(np.diff(header.block_starts))
    for symbol in MC_ALPHABET:
        ids = header.mismatch_only_by_symbol.get(symbol, ())
        writer.varint(len(ids))
        if ids:
            writer.packed(ids)
    body = writer.getvalue()
    return body + hashlib.sha256(body).digest()[:_HEADER_CHECK]


def decode_factorization_header(plain: bytes) -> FactorizationHeader:
    """Inverse of :func:`encode_factorization_header`.

    Raises:
        IndexFormatError: If the check bytes do not match (wrong key or damage)
    """
    body, check = plain[:-_HEADER_CHECK], plain[-_HEADER_CHECK:]
    if len(plain) < _HEADER_CHECK or hashlib.sha256(body).digest()[:_HEADER_CHECK] != check:
        raise IndexFormatError("Factorization header check failed")
    reader = BinaryReader(body)
    factor_count = reader.varint()
    block_size = reader.varint()
    source_length = reader.varint()
    if block_size < 1:
        raise IndexFormatError("Factorization header has no block size")
    block_count = -(-factor_count // block_size)
    sizes = reader.packed(block_count).astype(np.int64)
    gaps = reader.packed(max(block_count - 1, 0)).astype(np.int64)
    by_symbol: dict[str, tuple[int, ...]] = {}
    for symbol in MC_ALPHABET:
        count = reader.varint()
        if count:
            by_symbol[symbol] = tuple(reader.packed(count).tolist())
    return FactorizationHeader(
        factor_count=factor_count,
        block_size=block_size,
        source_length=source_length,
        block_offsets=np.concatenate(([0], np.cumsum(sizes))).astype(np.int64),
        block_starts=np.concatenate(([0], np.cumsum(gaps)))[:block_count].astype(np.int64),
        mismatch_only_by_symbol=by_symbol,
    )
