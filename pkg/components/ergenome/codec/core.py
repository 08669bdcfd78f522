"""Little-endian binary writer and reader used by every on-disk format.

Fixed-size integers are little-endian; variable-length payloads carry a
length prefix. Varints are unsigned LEB128 (seven bits per byte, low group
first); signed varints are zigzag-mapped first. Reading past the end of a
buffer raises ``IndexFormatError`` so truncated files surface as format
errors rather than ``struct.error``.
"""

from __future__ import annotations

import struct
from typing import TYPE_CHECKING

import numpy as np

from ergenome.codec.bitpack import bit_width, pack_uints, packed_size, unpack_uints
from ergenome.validation.exceptions import IndexFormatError

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray

_U8 = struct.Struct("<B")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def zigzag(value: int) -> int:
    """Map signed to unsigned so small magnitudes stay small: 0, -1, 1, -2 -> 0, 1, 2, 3."""
    return 2 * value if value >= 0 else -2 * value - 1


def unzigzag(value: int) -> int:
    return value >> 1 if not value & 1 else -(value >> 1) - 1


class BinaryWriter:
    """Append-only little-endian byte buffer."""

    __slots__ = ("_buf",)

    def __init__(self) -> None:
        self._buf = bytearray()

    def __len__(self) -> int:
        return len(self._buf)

    def getvalue(self) -> bytes:
        return bytes(self._buf)

    def u8(self, value: int) -> None:
        self._buf += _U8.pack(value)

    def u16(self, value: int) -> None:
        self._buf += _U16.pack(value)

    def u32(self, value: int) -> None:
        self._buf += _U32.pack(value)

    def u64(self, value: int) -> None:
        self._buf += _U64.pack(value)

    def varint(self, value: int) -> None:
        if value < 0:
            raise ValueError(f"varint of negative value {value}")
        while value > 0x7F:
            self._buf.append((value & 0x7F) | 0x80)
            value >>= 7
        self._buf.append(value)

    def svarint(self, value: int) -> None:
        self.varint(zigzag(value))

    def raw(self, data: bytes | bytearray | memoryview) -> None:
        self._buf += data

    def blob(self, data: bytes | bytearray | memoryview) -> None:
        """Write ``data`` with a u32 length prefix."""
        self.u32(len(data))
        self._buf += data

    def text(self, value: str) -> None:
        """Write UTF-8 text with a u16 length prefix."""
        encoded = value.encode("utf-8")
        self.u16(len(encoded))
        self._buf += encoded

    def array(self, values: NDArray[np.integer], dtype: str) -> None:
        """Write an integer array as a u64 count followed by raw ``dtype`` items."""
        arr = np.ascontiguousarray(values, dtype=np.dtype(dtype))
        self.u64(arr.size)
        self._buf += arr.tobytes()

    def packed(self, values: Sequence[int] | NDArray[np.integer]) -> None:
        """Frame-of-reference coding: minimum (varint), bit width (u8), packed offsets.

        The value count is not written; callers store it where they need it.
        """
        arr = np.asarray(values, dtype=np.uint64)
        base = int(arr.min()) if arr.size else 0
        offsets = arr - np.uint64(base)
        width = bit_width(int(offsets.max())) if arr.size else 0
        self.varint(base)
        self.u8(width)
        self._buf += pack_uints(offsets, width)


class BinaryReader:
    """Sequential reader over a bytes-like buffer."""

    __slots__ = ("_pos", "_view")

    def __init__(self, data: bytes | bytearray | memoryview, offset: int = 0) -> None:
        self._view = memoryview(data)
        self._pos = offset

    @property
    def position(self) -> int:
        return self._pos

    @property
    def remaining(self) -> int:
        return len(self._view) - self._pos

    def _take(self, size: int) -> memoryview:
        end = self._pos + size
        if size < 0 or end > len(self._view):
            raise IndexFormatError(
                f"Truncated data: need {size} bytes at offset {self._pos}, "
                f"{len(self._view) - self._pos} available"
            )
        chunk = self._view[self._pos : end]
        self._pos = end
        return chunk

    def u8(self) -> int:
        return int(_U8.unpack(self._take(1))[0])

    def u16(self) -> int:
        return int(_U16.unpack(self._take(2))[0])

    def u32(self) -> int:
        return int(_U32.unpack(self._take(4))[0])

    def u64(self) -> int:
        return int(_U64.unpack(self._take(8))[0])

    def varint(self) -> int:
        value = 0
        for shift in range(0, 70, 7):
            byte = self.u8()
            value |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return value
        raise IndexFormatError(f"Varint longer than 10 bytes before offset {self._pos}")

    def svarint(self) -> int:
        return unzigzag(self.varint())

    def raw(self, size: int) -> bytes:
        return bytes(self._take(size))

    def blob(self) -> bytes:
        return self.raw(self.u32())

    def text(self) -> str:
        try:
            return self.raw(self.u16()).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IndexFormatError("Invalid UTF-8 text field") from exc

    def array(self, dtype: str) -> NDArray[np.integer]:
        count = self.u64()
        item = np.dtype(dtype)
        return np.frombuffer(self._take(count * item.itemsize), dtype=item).copy()

    def packed(self, count: int) -> NDArray[np.uint64]:
        """Inverse of :meth:`BinaryWriter.packed` for ``count`` values."""
        base = self.varint()
        width = self.u8()
        if width > 64:
            raise IndexFormatError(f"Invalid packed bit width {width}")
        chunk = self._take(packed_size(count, width))
        return unpack_uints(chunk, count, width) + np.uint64(base)
