"""FM-index over one text.

Rows are the ``n + 1`` rows of the sorted rotation matrix of
``text + $``; row 0 is the terminator suffix. The stored BWT omits the
terminator, so it has exactly ``n`` symbols and ``eof_pos`` records the
row where the terminator sits in the full last column. ``eof_shift``
converts a full-column prefix length into a stored-BWT prefix length.

Rank queries use sampled checkpoints every ``occ_step`` BWT symbols plus
``bytes.count`` over the remainder.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from ergenome.fm.suffix_array import build_suffix_array, text_codes
from ergenome.validation.exceptions import (
    ContractViolationError,
    StartOfTextError,
    ValidationError,
)

if TYPE_CHECKING:
    from numpy.typing import NDArray

Interval = tuple[int, int]


class FMIndex:
    """Immutable FM-index: BWT, C, Occ checkpoints, marked rows and remap table.

    Build with :func:`build_fm_index`; the constructor is used by the
    builder and by deserialisation.
    """

    __slots__ = (
        "_C",
        "_checkpoints",
        "_samples",
        "alphabet",
        "bwt",
        "checkpoints",
        "eof_pos",
        "occ_step",
        "remap_table",
        "sample_positions",
        "sample_rate",
        "sample_rows",
        "text_len",
    )

    def __init__(
        self,
        *,
        bwt: bytes,
        eof_pos: int,
        sample_rate: int,
        sample_rows: NDArray[np.integer],
        sample_positions: NDArray[np.integer],
        occ_step: int = 64,
        checkpoints: NDArray[np.integer] | None = None,
    ) -> None:
        if not bwt:
            raise ValidationError("FM-index over an empty text")
        if sample_rate < 1 or occ_step < 1:
            raise ValidationError("sample_rate and occ_step must be >= 1")

        self.bwt = bytes(bwt)
        self.text_len = len(self.bwt)
        self.eof_pos = eof_pos
        self.sample_rate = sample_rate
        self.occ_step = occ_step

        codes = np.frombuffer(self.bwt, dtype=np.uint8)
        counts = np.bincount(codes, minlength=256)
        self.alphabet = bytes(int(b) for b in np.nonzero(counts)[0])
        self.remap_table = {sym: code for code, sym in enumerate(self.alphabet)}

        cumulative = 0
        self._C: dict[int, int] = {}
        for sym in self.alphabet:
            self._C[sym] = cumulative
            cumulative += int(counts[sym])

        if checkpoints is None:
            checkpoints = self._build_checkpoints(codes)
        self.checkpoints = np.asarray(checkpoints, dtype=np.int64)
        self._checkpoints: list[list[int]] = self.checkpoints.tolist()

        self.sample_rows = np.asarray(sample_rows, dtype=np.int64)
        self.sample_positions = np.asarray(sample_positions, dtype=np.int64)
        self._samples = dict(
            zip(self.sample_rows.tolist(), self.sample_positions.tolist(), strict=True)
        )

    def _build_checkpoints(self, codes: NDArray[np.uint8]) -> NDArray[np.int64]:
        blocks = self.text_len // self.occ_step + 1
        table = np.zeros((blocks, len(self.alphabet)), dtype=np.int64)
        for col, sym in enumerate(self.alphabet):
            running = np.concatenate(([0], np.cumsum(codes == sym, dtype=np.int64)))
            table[:, col] = running[:: self.occ_step][:blocks]
        return table

    # ------------------------------------------------------------------
    # Primitives
    # ------------------------------------------------------------------

    @property
    def rows(self) -> int:
        """Number of rows, ``text_len + 1``."""
        return self.text_len + 1

    def is_in_ref(self, c: str) -> bool:
        """True iff ``c`` occurs in the indexed text."""
        return len(c) == 1 and ord(c) in self.remap_table

    def remap(self, c: str) -> int:
        """Dense code of ``c`` within this index's alphabet."""
        try:
            return self.remap_table[ord(c)]
        except (KeyError, TypeError) as exc:
            raise ContractViolationError(f"Symbol {c!r} is not in the indexed text") from exc

    def C(self, c: str) -> int:  # noqa: N802
        """Number of text symbols lexically smaller than ``c`` (terminator excluded)."""
        sym = ord(c)
        if sym in self._C:
            return self._C[sym]
        # absent symbol: count of present symbols below it
        return sum(self.occ(chr(s), self.text_len) for s in self.alphabet if s < sym)

    def occ(self, c: str, k: int) -> int:
        """Occurrences of ``c`` in the first ``k`` stored BWT symbols."""
        if not 0 <= k <= self.text_len:
            raise ContractViolationError(f"Occ prefix {k} outside [0, {self.text_len}]")
        code = self.remap_table.get(ord(c))
        if code is None:
            return 0
        block = k // self.occ_step
        start = block * self.occ_step
        return self._checkpoints[block][code] + self.bwt.count(ord(c), start, k)

    def eof_shift(self, pos: int) -> int:
        """Map a full-column prefix length to the stored-BWT prefix length."""
        if not 0 <= pos <= self.rows:
            raise ContractViolationError(f"Row {pos} outside [0, {self.rows}]")
        return pos - 1 if pos > self.eof_pos else pos

    def _check_row(self, row: int) -> None:
        if not 0 <= row < self.rows:
            raise ContractViolationError(f"Row {row} outside [0, {self.rows - 1}]")

    def bwt_char(self, row: int) -> str:
        """Symbol preceding the suffix of ``row`` in the text.

        Raises:
            StartOfTextError: For the row of the suffix starting at position 0
        """
        self._check_row(row)
        if row == self.eof_pos:
            raise StartOfTextError("Row of text position 0 has no preceding symbol")
        return chr(self.bwt[row - 1 if row > self.eof_pos else row])

    def backward_step(self, row: int) -> int:
        """LF-mapping: row of the suffix starting one position earlier.

        Raises:
            StartOfTextError: When ``row`` is the suffix at text position 0
        """
        c = self.bwt_char(row)
        return 1 + self._C[ord(c)] + self.occ(c, self.eof_shift(row))

    def backward_extend(self, interval: Interval, c: str) -> Interval | None:
        """Prepend ``c`` to the pattern of ``interval``; None when no row remains."""
        sym = ord(c) if len(c) == 1 else -1
        base = self._C.get(sym)
        if base is None:
            return None
        sp, ep = interval
        new_sp = 1 + base + self.occ(c, self.eof_shift(sp))
        new_ep = base + self.occ(c, self.eof_shift(ep + 1))
        if new_sp > new_ep:
            return None
        return new_sp, new_ep

    def full_interval(self) -> Interval:
        """Interval of the empty pattern (all rows)."""
        return 0, self.text_len

    def get_position(self, row: int) -> int:
        """Text position of the suffix of ``row`` via the nearest marked row."""
        self._check_row(row)
        steps = 0
        while row not in self._samples:
            row = self.backward_step(row)
            steps += 1
        return self._samples[row] + steps


def build_fm_index_from_suffix_array(
    text: str, sa: NDArray[np.int64], sample_rate: int = 32, occ_step: int = 64
) -> FMIndex:
    """Build an FM-index from ``text`` and its terminator-inclusive suffix array."""
    codes = text_codes(text)
    eof_pos = int(np.flatnonzero(sa == 0)[0])
    preceding = codes[sa - 1]  # sa == 0 wraps to the last symbol and is dropped
    bwt = np.delete(preceding, eof_pos).tobytes()

    marked = (sa % sample_rate) == 0
    return FMIndex(
        bwt=bwt,
        eof_pos=eof_pos,
        sample_rate=sample_rate,
        sample_rows=np.flatnonzero(marked),
        sample_positions=sa[marked],
        occ_step=occ_step,
    )


def build_fm_index(text: str, sample_rate: int = 32, occ_step: int = 64) -> FMIndex:
    """Build the FM-index of ``text``.

    Raises:
        ValidationError: If ``text`` is empty or ``sample_rate`` < 1
    """
    if sample_rate < 1:
        raise ValidationError("sample_rate must be >= 1")
    return build_fm_index_from_suffix_array(text, build_suffix_array(text), sample_rate, occ_step)


def C(fm: FMIndex, c: str) -> int:  # noqa: N802
    return fm.C(c)


def Occ(fm: FMIndex, c: str, k: int) -> int:  # noqa: N802
    return fm.occ(c, k)


def remap(fm: FMIndex, c: str) -> int:
    return fm.remap(c)


def is_in_ref(fm: FMIndex, c: str) -> bool:
    return fm.is_in_ref(c)


def eof_shift(fm: FMIndex, pos: int) -> int:
    return fm.eof_shift(pos)


def backward_step(fm: FMIndex, sai: int) -> int:
    """One LF step; see :meth:`FMIndex.backward_step`."""
    return fm.backward_step(sai)


def backward_search(fm: FMIndex, pattern: str) -> Interval | None:
    """Suffix-array interval of the suffixes prefixed by ``pattern``.

    Examples:
        >>> fm = build_fm_index("GATTACA")
        >>> sp, ep = backward_search(fm, "TA")
        >>> ep - sp + 1
        1
    """
    interval = fm.full_interval()
    for c in reversed(pattern):
        narrowed = fm.backward_extend(interval, c)
        if narrowed is None:
            return None
        interval = narrowed
    return interval


def search_pat_rev(fm_rev: FMIndex, pattern: str) -> Interval | None:
    """Backward search on the reverse-text index feeding ``pattern`` first to last.

    The result is the interval of reverse-text suffixes prefixed by
    ``pattern[::-1]``.
    """
    interval = fm_rev.full_interval()
    for c in pattern:
        narrowed = fm_rev.backward_extend(interval, c)
        if narrowed is None:
            return None
        interval = narrowed
    return interval


def get_position_in_reference(fm: FMIndex, sai: int) -> int:
    """Text position of row ``sai``."""
    return fm.get_position(sai)
