"""Relative Lempel-Ziv factorization of a sequence against a reference.

The parser is greedy. From the current position it grows the referential
part one symbol at a time by backward-extending an interval of the
reverse-reference index (so the interval always holds the R_rev suffixes
prefixed by the reversed referential part). Growth stops at the first of:

- the last-but-one symbol of the sequence (the last is always a mismatch),
- a symbol absent from R,
- an unsuccessful extension,
- a change between N and non-N symbols.

The next symbol becomes the mismatch symbol and the scan resumes after it.
"""

from __future__ import annotations

import concurrent.futures
from typing import TYPE_CHECKING

from ergenome.logging import get_logger
from ergenome.rlz.models import Factor, Factorization
from ergenome.validation.exceptions import (
    ContractViolationError,
    ErGenomeError,
    FactorizationError,
    ValidationError,
)

if TYPE_CHECKING:
    from collections.abc import Sequence as SequenceOf

    from ergenome.fm import CorrespondenceTables, FMIndex
    from ergenome.sequence import Sequence

logger = get_logger(__name__)


def _referential_keys(
    fm: FMIndex, tables: CorrespondenceTables, sai_rev: int, ref_length: int
) -> tuple[int, int, int]:
    """Derive (sai, tp, sai_rev_start) for a referential part of ``ref_length``.

    ``sai_rev`` prefixes the reversed part in R_rev, so ``r2f`` gives the R row
    of the part's last symbol; ``ref_length - 1`` LF steps reach its first.
    """
    sai = tables.rev_to_fwd(sai_rev)
    for _ in range(ref_length - 1):
        sai = fm.backward_step(sai)
    tp = fm.get_position(sai)
    # R_rev row of reverse position n - tp, whose backward scan emits R[tp], R[tp+1], ...
    sai_rev_start = 0 if tp == 0 else tables.fwd_to_rev(fm.backward_step(sai))
    return sai, tp, sai_rev_start


def factorize_text(
    individual_id: str,
    text: str,
    fm_rev: FMIndex,
    fm: FMIndex,
    tables: CorrespondenceTables,
    block_size: int = 128,
) -> Factorization:
    """Factorize a raw symbol string; see :func:`factorize`."""
    if not text:
        raise ValidationError(f"Cannot factorize an empty sequence ({individual_id})")
    if not text.isascii():
        raise ValidationError(f"Sequence {individual_id} holds non-ASCII symbols")

    size = len(text)
    factors: list[Factor] = []
    i = 0
    while i < size:
        first = text[i]
        if i == size - 1 or not fm_rev.is_in_ref(first):
            factors.append(Factor(sai_rev_start=0, length=1, mc=first))
            i += 1
            continue

        interval = fm_rev.backward_extend(fm_rev.full_interval(), first)
        if interval is None:
            raise ContractViolationError(f"Symbol {first!r} vanished from the reference index")
        last_is_n = first == "N"
        ref_length = 1
        while i + ref_length < size - 1:
            symbol = text[i + ref_length]
            if (symbol == "N") != last_is_n or not fm_rev.is_in_ref(symbol):
                break
            extended = fm_rev.backward_extend(interval, symbol)
            if extended is None:
                break
            interval = extended
            ref_length += 1

        sai_rev = interval[0]
        sai, tp, sai_rev_start = _referential_keys(fm, tables, sai_rev, ref_length)
        factors.append(
            Factor(
                sai_rev_start=sai_rev_start,
                length=ref_length + 1,
                mc=text[i + ref_length],
                sai_rev=sai_rev,
                sai=sai,
                tp=tp,
            )
        )
        i += ref_length + 1

    fz = Factorization(
        individual_id=individual_id,
        factors=tuple(factors),
        block_size=block_size,
        source_length=size,
    )
    logger.info(
        "Sequence factorized",
        individual_id=individual_id,
        source_length=size,
        factor_count=fz.factor_count,
        l_max=fz.l_max,
    )
    return fz


def factorize(
    sequence: Sequence,
    fm_rev: FMIndex,
    fm: FMIndex,
    tables: CorrespondenceTables,
    block_size: int = 128,
) -> Factorization:
    """Greedy RLZ factorization of ``sequence`` against the indexed reference.

    Args:
        sequence: Individual sequence
        fm_rev: FM-index of the reversed reference
        fm: FM-index of the reference
        tables: R2F/F2R tables between the two indexes
        block_size: Factors per block

    Returns:
        The factorization, whose factors decode back to ``sequence.data``

    Raises:
        ValidationError: If the sequence is empty or ``block_size`` < 1

    Examples:
        >>> from ergenome.fm import build_reference_index
        >>> from ergenome.sequence import Sequence
        >>> ref = build_reference_index("ACGTACGT")
        >>> fz = factorize(Sequence(id="s", data="ACGTTACG"), ref.fm_rev, ref.fm, ref.tables)
        >>> [(f.length, f.mc) for f in fz.factors]
        [(5, 'T'), (3, 'G')]
    """
    return factorize_text(sequence.id, sequence.data, fm_rev, fm, tables, block_size)


_worker_state: dict[str, object] = {}


def _init_worker(fm_rev: FMIndex, fm: FMIndex, tables: CorrespondenceTables, block_size: int) -> None:
    _worker_state.update(fm_rev=fm_rev, fm=fm, tables=tables, block_size=block_size)


def _factorize_in_worker(individual_id: str, text: str) -> Factorization:
    return factorize_text(
        individual_id,
        text,
        _worker_state["fm_rev"],  # type: ignore[arg-type]
        _worker_state["fm"],  # type: ignore[arg-type]
        _worker_state["tables"],  # type: ignore[arg-type]
        _worker_state["block_size"],  # type: ignore[arg-type]
    )


def factorize_parallel(
    collection: SequenceOf[Sequence],
    fm_rev: FMIndex,
    fm: FMIndex,
    tables: CorrespondenceTables,
    block_size: int = 128,
    workers: int = 1,
) -> list[Factorization]:
    """Factorize every sequence of ``collection``, one process per worker.

    The result is in input order and identical to sequential :func:`factorize`
    calls whatever the worker count.

    Raises:
        ValidationError: If ``workers`` < 1
        FactorizationError: If one sequence fails; carries its ``individual_id``
    """
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    if not collection:
        return []

    if workers == 1 or len(collection) == 1:
        results = []
        for seq in collection:
            try:
                results.append(factorize(seq, fm_rev, fm, tables, block_size))
            except ErGenomeError as e:
                raise FactorizationError(f"Factorization of {seq.id} failed: {e}", seq.id) from e
        return results

    with concurrent.futures.ProcessPoolExecutor(
        max_workers=min(workers, len(collection)),
        initializer=_init_worker,
        initargs=(fm_rev, fm, tables, block_size),
    ) as pool:
        futures = [pool.submit(_factorize_in_worker, seq.id, seq.data) for seq in collection]
        results = []
        for seq, future in zip(collection, futures, strict=True):
            try:
                results.append(future.result())
            except ErGenomeError as e:
                raise FactorizationError(f"Factorization of {seq.id} failed: {e}", seq.id) from e
    return results
