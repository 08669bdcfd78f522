"""Fixed-width bit packing of unsigned integer arrays.

Values are written most-significant bit first and padded to a whole byte
at the end of the run.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Iterable

    from numpy.typing import NDArray


def bit_width(value: int) -> int:
    """Minimum number of bits representing ``value`` (0 for 0).

    Examples:
        >>> bit_width(9)
        4
    """
    return int(value).bit_length()


def packed_size(count: int, width: int) -> int:
    """Bytes occupied by ``count`` values of ``width`` bits."""
    return (count * width + 7) // 8


def pack_uints(values: Iterable[int] | NDArray[np.integer], width: int) -> bytes:
    """Pack unsigned integers into ``width`` bits each.

    Raises:
        ValueError: If a value does not fit in ``width`` bits
    """
    if isinstance(values, np.ndarray):
        arr = values.astype(np.uint64, copy=False)
    else:
        arr = np.fromiter(values, dtype=np.uint64)
    if width == 0 or arr.size == 0:
        if arr.size and int(arr.max()) != 0:
            raise ValueError("non-zero value packed with width 0")
        return b""
    if width < 64 and int(arr.max()) >> width:
        raise ValueError(f"value {int(arr.max())} does not fit in {width} bits")

    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    bits = ((arr[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits.ravel()).tobytes()


def unpack_uints(data: bytes | memoryview, count: int, width: int) -> NDArray[np.uint64]:
    """Inverse of :func:`pack_uints`.

    Raises:
        ValueError: If ``data`` is shorter than ``count * width`` bits
    """
    if count == 0 or width == 0:
        return np.zeros(count, dtype=np.uint64)
    needed = packed_size(count, width)
    if len(data) < needed:
        raise ValueError(f"packed run needs {needed} bytes, got {len(data)}")

    raw = np.frombuffer(data, dtype=np.uint8, count=needed)
    bits = np.unpackbits(raw, count=count * width).reshape(count, width).astype(np.uint64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    return (bits << shifts).sum(axis=1, dtype=np.uint64)
