"""Suffix array construction by prefix doubling on numpy arrays.

A virtual terminator, smaller than every text symbol, is appended, so the
returned array has ``len(text) + 1`` entries and starts with ``len(text)``.
Each round sorts suffixes by the rank pair (rank[i], rank[i + k]) with
``np.lexsort``; the loop stops once all ranks are distinct.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from ergenome.validation.exceptions import ValidationError

if TYPE_CHECKING:
    from numpy.typing import NDArray


def text_codes(text: str) -> NDArray[np.uint8]:
    """Byte codes of an ASCII symbol string."""
    try:
        return np.frombuffer(text.encode("ascii"), dtype=np.uint8)
    except UnicodeEncodeError as exc:
        raise ValidationError("Indexed text must be ASCII") from exc


def build_suffix_array(text: str) -> NDArray[np.int64]:
    """Return the permutation sorting all suffixes of ``text`` + terminator.

    Examples:
        >>> build_suffix_array("ABAB").tolist()
        [4, 2, 0, 3, 1]
    """
    if not text:
        raise ValidationError("Cannot build a suffix array of an empty text")

    size = len(text) + 1
    rank = np.zeros(size, dtype=np.int64)
    rank[:-1] = text_codes(text).astype(np.int64) + 1

    k = 1
    while True:
        second = np.full(size, -1, dtype=np.int64)
        if k < size:
            second[: size - k] = rank[k:]
        order = np.lexsort((second, rank))

        sorted_first = rank[order]
        sorted_second = second[order]
        boundary = (sorted_first[1:] != sorted_first[:-1]) | (
            sorted_second[1:] != sorted_second[:-1]
        )
        new_rank = np.empty(size, dtype=np.int64)
        new_rank[order] = np.concatenate(([0], np.cumsum(boundary)))
        rank = new_rank

        if int(rank.max()) == size - 1:
            return order.astype(np.int64)
        k *= 2


def inverse_permutation(perm: NDArray[np.int64]) -> NDArray[np.int64]:
    """``inv[perm[i]] == i``."""
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size, dtype=perm.dtype)
    return inv
