"""Invariable coding of sorted integer runs, and permutation ranks.

A node key run is stored as its first value (u64), its length (u32), a bit
width ``w`` (u8) and the ``len - 1`` differences to the first value in ``w``
bits each, where ``w`` is the minimum width of the largest difference.

Leaf value runs use the same differences but a varint first value and no
length, which the reader already knows from the node's key section. The
order a run had before sorting is kept as the rank of its permutation in
the factorial number system, stored as the fewest little-endian bytes
(none for a run that was already sorted).
"""

from __future__ import annotations

from bisect import bisect_left
from math import factorial
from typing import TYPE_CHECKING

import numpy as np

from ergenome.codec import (
    BinaryReader,
    BinaryWriter,
    bit_width,
    pack_uints,
    packed_size,
    unpack_uints,
)
from ergenome.validation.exceptions import IndexFormatError, ValidationError

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray


def _sorted_diffs(values: Sequence[int]) -> tuple[int, NDArray[np.uint64], int]:
    arr = np.asarray(values, dtype=np.uint64)
    if arr.size > 1 and bool(np.any(arr[1:] < arr[:-1])):
        raise ValidationError("Invariable coding needs keys sorted ascending")
    first = int(arr[0]) if arr.size else 0
    diffs = arr[1:] - np.uint64(first)
    width = bit_width(int(diffs.max())) if diffs.size else 0
    return first, diffs, width


def _read_diffs(reader: BinaryReader, first: int, count: int) -> list[int]:
    width = reader.u8()
    if width > 64:
        raise IndexFormatError(f"Invalid invariable bit width {width}")
    if count == 0:
        return []
    diffs = unpack_uints(reader.raw(packed_size(count - 1, width)), count - 1, width)
    return [first, *(diffs + np.uint64(first)).tolist()]


def write_invariable(writer: BinaryWriter, keys: Sequence[int]) -> None:
    first, diffs, width = _sorted_diffs(keys)
    writer.u64(first)
    writer.u32(diffs.size + 1 if len(keys) else 0)
    writer.u8(width)
    writer.raw(pack_uints(diffs, width))


def read_invariable(reader: BinaryReader) -> list[int]:
    first = reader.u64()
    count = reader.u32()
    return _read_diffs(reader, first, count)


def write_sorted_run(writer: BinaryWriter, values: Sequence[int]) -> None:
    """Invariable-code sorted ``values`` without their count.

    Raises:
        ValidationError: If ``values`` is not sorted ascending
    """
    first, diffs, width = _sorted_diffs(values)
    writer.varint(first)
    writer.u8(width)
    writer.raw(pack_uints(diffs, width))


def read_sorted_run(reader: BinaryReader, count: int) -> list[int]:
    """Inverse of :func:`write_sorted_run` for a run of ``count`` values."""
    first = reader.varint()
    return _read_diffs(reader, first, count)


def encode_node_invariable(keys: Sequence[int]) -> bytes:
    """Encode sorted ``keys``.

    Raises:
        ValidationError: If ``keys`` is not sorted ascending

    Examples:
        >>> payload = encode_node_invariable([100, 103, 109])
        >>> payload[12]  # bit width of the largest difference, 9
        4
    """
    writer = BinaryWriter()
    write_invariable(writer, keys)
    return writer.getvalue()


def decode_node_invariable(payload: bytes) -> list[int]:
    """Inverse of :func:`encode_node_invariable`."""
    return read_invariable(BinaryReader(payload))


def permutation_rank(order: Sequence[int]) -> int:
    """Lexicographic rank of ``order``, a permutation of ``range(len(order))``.

    Examples:
        >>> permutation_rank([0, 1, 2]), permutation_rank([2, 1, 0])
        (0, 5)
    """
    remaining = list(range(len(order)))
    rank = 0
    for position, item in enumerate(order):
        digit = bisect_left(remaining, item)
        if digit == len(remaining) or remaining[digit] != item:
            raise ValidationError(f"Not a permutation: {item} repeated or out of range")
        del remaining[digit]
        rank = rank * (len(order) - position) + digit
    return rank


def permutation_from_rank(rank: int, size: int) -> list[int]:
    """Inverse of :func:`permutation_rank`.

    Raises:
        IndexFormatError: If ``rank`` is not below ``size!``
    """
    if not 0 <= rank < factorial(size):
        raise IndexFormatError(f"Permutation rank out of range for {size} items")
    digits = []
    for base in range(1, size + 1):
        rank, digit = divmod(rank, base)
        digits.append(digit)
    remaining = list(range(size))
    return [remaining.pop(digit) for digit in reversed(digits)]


def rank_bytes(rank: int) -> bytes:
    return rank.to_bytes((rank.bit_length() + 7) // 8, "little")
