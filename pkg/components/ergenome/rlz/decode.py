"""Factor decoding by backward scanning of the reverse-reference index.

A factor's referential part is read one symbol at a time: starting at
``sai_rev_start``, each read takes the BWT symbol of the current R_rev row
(which is the next symbol of R in forward order) and moves one LF step.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from ergenome.fm import get_position_in_reference
from ergenome.validation.core import validate_range
from ergenome.validation.exceptions import (
    ContractViolationError,
    CorruptionError,
    StartOfTextError,
)

if TYPE_CHECKING:
    from collections.abc import Iterator

    from ergenome.fm import FMIndex
    from ergenome.rlz.models import Factor, Factorization


def iter_factor_symbols(
    fm_rev: FMIndex, sai_rev_start: int, length: int, mc: str, offset: int = 0
) -> Iterator[str]:
    """Yield the symbols of a factor from ``offset`` to its end.

    Raises:
        CorruptionError: If the scan runs past the start of R_rev
    """
    ref_length = length - 1
    row = sai_rev_start
    for k in range(ref_length):
        try:
            symbol = fm_rev.bwt_char(row)
            if k + 1 < ref_length:
                row = fm_rev.backward_step(row)
        except StartOfTextError as e:
            raise CorruptionError(
                f"Factor scan from row {sai_rev_start} exhausted the reference after {k} symbols"
            ) from e
        if k >= offset:
            yield symbol
    if offset <= ref_length:
        yield mc


def decode_factor(factor: Factor, fm_rev: FMIndex) -> str:
    """Return the ``factor.length`` symbols the factor encodes.

    Examples:
        A mismatch-only factor decodes to its mismatch symbol:

        >>> from ergenome.fm import build_fm_index
        >>> from ergenome.rlz.models import Factor
        >>> decode_factor(Factor(sai_rev_start=0, length=1, mc="N"), build_fm_index("TGCA"))
        'N'
    """
    return "".join(iter_factor_symbols(fm_rev, factor.sai_rev_start, factor.length, factor.mc))


def reference_start(factor: Factor, fm_rev: FMIndex) -> int | None:
    """Start ``tp`` of the factor's referential part in R, from its stored fields.

    ``sai_rev_start`` is the R_rev row of reverse position ``n - tp``, so
    ``tp`` is recovered with one position lookup on ``fm_rev``. Row 0 gives
    ``tp == 0``. Mismatch-only factors have no referential part.
    """
    if factor.is_mismatch_only:
        return None
    return fm_rev.text_len - get_position_in_reference(fm_rev, factor.sai_rev_start)


def char_at_via_reverse_index(
    fz: Factorization, fm_rev: FMIndex, factor_index: int, offset: int
) -> str:
    """Symbol at ``offset`` of factor ``factor_index`` in O(offset) LF steps.

    Raises:
        ContractViolationError: If ``offset`` is not inside the factor
    """
    factor = fz.factors[factor_index]
    if not 0 <= offset < factor.length:
        raise ContractViolationError(
            f"Offset {offset} outside factor {factor_index} of length {factor.length}"
        )
    if offset == factor.length - 1:
        return factor.mc
    return next(iter_factor_symbols(fm_rev, factor.sai_rev_start, factor.length, factor.mc, offset))


def iter_text(fz: Factorization, fm_rev: FMIndex, start: int = 0) -> Iterator[str]:
    """Yield the individual sequence from ``start`` to its end."""
    if start >= fz.source_length:
        return
    index, offset = fz.locate_position(start)
    for factor in fz.factors[index:]:
        yield from iter_factor_symbols(fm_rev, factor.sai_rev_start, factor.length, factor.mc, offset)
        offset = 0


def extract_text(fz: Factorization, fm_rev: FMIndex, start: int, length: int) -> str:
    """Return ``S[start : start + length]`` decoding only the covering factors.

    Raises:
        ValidationError: If the range is outside the sequence
    """
    validate_range(start, length, fz.source_length)
    if length == 0:
        return ""
    out: list[str] = []
    for symbol in iter_text(fz, fm_rev, start):
        out.append(symbol)
        if len(out) == length:
            break
    return "".join(out)
