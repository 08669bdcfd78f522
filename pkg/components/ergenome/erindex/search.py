"""Pattern search over an ER-index.

An occurrence either lies wholly inside the referential part of one
factor (internal) or covers at least one mismatch symbol (external).

Internal occurrences come from the occurrences of the pattern in R: a
factor whose referential part starts at ``tpf`` and has length ``l``
copies the occurrence at ``tp`` iff ``tp + m - l <= tpf <= tp``.

External occurrences are found per split point ``k``, the pattern
position of a mismatch symbol. When the left side ``P[:k]`` is the longer
one, candidate factors are those whose referential part ends with it
(reverse tree); otherwise they are the factors following a mismatch
symbol ``P[k]`` whose referential part starts with a prefix of the right
side ``P[k+1:]`` (forward tree). Every candidate is then checked against
the sequence text around it.
"""

from __future__ import annotations

import concurrent.futures
from typing import TYPE_CHECKING, NamedTuple

from ergenome.erindex.sources import matches_at
from ergenome.fm import backward_search, search_pat_rev
from ergenome.models import Occurrence, TreeKind
from ergenome.validation.core import validate_pattern
from ergenome.validation.exceptions import CorruptionError

if TYPE_CHECKING:
    from collections.abc import Iterable

    from ergenome.crypto import KeyPortfolio
    from ergenome.erindex.core import ERIndex
    from ergenome.erindex.protocol import FactorSource
    from ergenome.fm import FMIndex


class _Candidate(NamedTuple):
    ordinal: int
    mc_factor: int
    lsvl: int
    rsvl: int


def _occurrence(source: FactorSource, start: int, m: int) -> Occurrence:
    fact_ind, fact_off = source.locate_position(start)
    end_ind, end_off = source.locate_position(start + m - 1)
    return Occurrence(
        individual_id=source.individual_id,
        fact_ind=fact_ind,
        fact_off=fact_off,
        ending_fact_ind=end_ind,
        ending_fact_off=end_off,
        text_position=start,
    )


# ----------------------------------------------------------------------
# Internal occurrences
# ----------------------------------------------------------------------


def locate_internal_occs(
    index: ERIndex, pattern: str, portfolio: KeyPortfolio | None = None
) -> list[Occurrence]:
    """Occurrences lying inside one factor's referential part (text positions unset)."""
    if portfolio is not None:
        index = index.restrict(portfolio)
    fm = index.reference.fm
    m = len(pattern)
    interval = backward_search(fm, pattern)
    if interval is None or index.l_max - 1 < m:
        return []
    pos_tree = index.trees[TreeKind.POSITION]
    occs: list[Occurrence] = []
    for row in range(interval[0], interval[1] + 1):
        tp = fm.get_position(row)
        for entry in pos_tree.range_query(max(0, tp + m - index.l_max), tp):
            source = index.source(entry.individual)
            if source is None:
                continue
            tpf = entry.key
            ref_length = source.factor(entry.factor_id).length - 1
            if tp + m - ref_length <= tpf <= tp:
                offset = tp - tpf
                occs.append(
                    Occurrence(
                        individual_id=source.individual_id,
                        fact_ind=entry.factor_id,
                        fact_off=offset,
                        ending_fact_ind=entry.factor_id,
                        ending_fact_off=offset + m - 1,
                    )
                )
    return occs


# ----------------------------------------------------------------------
# Side searches
# ----------------------------------------------------------------------


def _longest_suffix_in_reference(fm: FMIndex, side: str) -> int:
    interval = fm.full_interval()
    length = 0
    for symbol in reversed(side):
        narrowed = fm.backward_extend(interval, symbol)
        if narrowed is None:
            break
        interval = narrowed
        length += 1
    return length


def _longest_prefix_in_reference(fm_rev: FMIndex, side: str) -> int:
    interval = fm_rev.full_interval()
    length = 0
    for symbol in side:
        narrowed = fm_rev.backward_extend(interval, symbol)
        if narrowed is None:
            break
        interval = narrowed
        length += 1
    return length


def _group(pairs: Iterable[tuple[int, int]]) -> dict[int, list[int]]:
    grouped: dict[int, set[int]] = {}
    for ordinal, factor_id in pairs:
        grouped.setdefault(ordinal, set()).add(factor_id)
    return {ordinal: sorted(ids) for ordinal, ids in sorted(grouped.items())}


def find_left_side_factors(index: ERIndex, ls: str) -> tuple[dict[int, list[int]], int]:
    """Factors whose referential part ends with ``ls``, and the verified length.

    The verified length is that of the longest suffix of ``ls`` occurring in
    R; no factor is returned unless it covers the whole side.
    """
    if not ls:
        return {}, 0
    verified = _longest_suffix_in_reference(index.reference.fm, ls)
    if verified < len(ls):
        return {}, verified
    interval = search_pat_rev(index.reference.fm_rev, ls)
    if interval is None:
        return {}, verified
    pairs = []
    for entry in index.trees[TreeKind.REVERSE].range_query(*interval):
        source = index.source(entry.individual)
        if source is not None and source.factor(entry.factor_id).length - 1 >= len(ls):
            pairs.append((entry.individual, entry.factor_id))
    return _group(pairs), verified


def _class_boundary(side: str) -> int:
    """Length of the leading run of N or of non-N symbols."""
    first_is_n = side[0] == "N"
    for position, symbol in enumerate(side):
        if (symbol == "N") != first_is_n:
            return position
    return len(side)


def _right_side_candidates(index: ERIndex, rs: str) -> tuple[dict[tuple[int, int], int], int]:
    """Map (ordinal, factor id) to the prefix length of ``rs`` its referential part starts with."""
    fm = index.reference.fm
    verified = _longest_prefix_in_reference(index.reference.fm_rev, rs)
    lengths = set()
    if verified:
        lengths.add(verified)
        boundary = _class_boundary(rs)
        if boundary < verified:
            lengths.add(boundary)
        if verified == len(rs) > 1:
            lengths.add(len(rs) - 1)

    found: dict[tuple[int, int], int] = {}
    forward = index.trees[TreeKind.FORWARD]
    for u in sorted(lengths, reverse=True):
        interval = backward_search(fm, rs[:u])
        if interval is None:
            continue
        for entry in forward.range_query(*interval):
            if index.source(entry.individual) is not None:
                found.setdefault((entry.individual, entry.factor_id), u)

    for ordinal in index.authorized_ordinals:
        source = index.source(ordinal)
        if source is None:
            continue
        for factor_id in source.mismatch_only_ids(rs[0]):
            found.setdefault((ordinal, factor_id), 0)
    return found, verified


def find_right_side_factors(index: ERIndex, rs: str) -> tuple[dict[int, list[int]], int]:
    """Factors starting with the longest prefix of ``rs`` found in R, and its length.

    Factors whose referential part ends early because of an N boundary or
    the end of the sequence, and mismatch-only factors whose symbol is
    ``rs[0]``, are included.
    """
    if not rs:
        return {}, 0
    found, verified = _right_side_candidates(index, rs)
    return _group(found), verified


# ----------------------------------------------------------------------
# Verification
# ----------------------------------------------------------------------


def pat_rem_part(
    source: FactorSource,
    fm_rev: FMIndex,
    pattern: str,
    split_point: int,
    lsvl: int,
    rsvl: int,
    mc_factor: int,
) -> Occurrence | None:
    """Verify the unverified parts of ``pattern`` around a mismatch symbol.

    ``pattern[split_point]`` is the mismatch symbol of factor ``mc_factor``;
    ``lsvl`` symbols to its left and ``rsvl`` to its right are already known
    to match. The rest is compared with the sequence one symbol at a time.

    Returns:
        The occurrence, or None if the pattern does not match there
    """
    m = len(pattern)
    factor = source.factor(mc_factor)
    if factor.mc != pattern[split_point]:
        return None
    mc_position = source.factor_start(mc_factor) + factor.length - 1
    start = mc_position - split_point
    if start < 0 or start + m > source.source_length:
        return None
    left_end = split_point - lsvl
    right_start = split_point + 1 + rsvl
    if not matches_at(source, fm_rev, start, pattern[:left_end]):
        return None
    if not matches_at(source, fm_rev, start + right_start, pattern[right_start:]):
        return None
    return _occurrence(source, start, m)


def _split_candidates(index: ERIndex, pattern: str, k: int) -> list[_Candidate]:
    m = len(pattern)
    ls, rs = pattern[:k], pattern[k + 1 :]
    candidates: list[_Candidate] = []
    if 2 * k > m or (not rs and k >= 1):
        grouped, verified = find_left_side_factors(index, ls)
        if verified < len(ls):
            return []
        for ordinal, factor_ids in grouped.items():
            source = index.source(ordinal)
            if source is None:
                continue
            for factor_id in factor_ids:
                if source.factor(factor_id).mc == pattern[k]:
                    candidates.append(_Candidate(ordinal, factor_id, len(ls), 0))
        return candidates

    found, _ = _right_side_candidates(index, rs)
    for (ordinal, factor_id), u in sorted(found.items()):
        if factor_id == 0:
            continue
        source = index.source(ordinal)
        if source is None:
            continue
        following = source.factor(factor_id)
        if source.factor(factor_id - 1).mc != pattern[k]:
            continue
        candidates.append(_Candidate(ordinal, factor_id - 1, 0, min(u, following.length - 1)))
    return candidates


def _single_symbol_candidates(index: ERIndex, symbol: str) -> list[_Candidate]:
    candidates = []
    for ordinal in index.authorized_ordinals:
        source = index.source(ordinal)
        if source is None:
            continue
        for factor_id in range(source.factor_count):
            if source.factor(factor_id).mc == symbol:
                candidates.append(_Candidate(ordinal, factor_id, 0, 0))
    return candidates


def _verify_split(index: ERIndex, pattern: str, k: int) -> list[Occurrence]:
    if len(pattern) == 1:
        candidates = _single_symbol_candidates(index, pattern)
    else:
        candidates = _split_candidates(index, pattern, k)
    occs = []
    fm_rev = index.reference.fm_rev
    for candidate in dict.fromkeys(candidates):
        source = index.source(candidate.ordinal)
        if source is None:
            continue
        occ = pat_rem_part(
            source, fm_rev, pattern, k, candidate.lsvl, candidate.rsvl, candidate.mc_factor
        )
        if occ is not None:
            occs.append(occ)
    return occs


def locate_external_occs(
    index: ERIndex, pattern: str, portfolio: KeyPortfolio | None = None
) -> list[Occurrence]:
    """Occurrences covering at least one mismatch symbol, with text positions."""
    if portfolio is not None:
        index = index.restrict(portfolio)
    splits = range(len(pattern))
    if index.parallel_splits and len(pattern) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=max(index.workers, 2)) as pool:
            per_split = list(pool.map(lambda k: _verify_split(index, pattern, k), splits))
    else:
        per_split = [_verify_split(index, pattern, k) for k in splits]
    return [occ for occs in per_split for occ in occs]


# ----------------------------------------------------------------------
# Positions and the public entry point
# ----------------------------------------------------------------------


def find_text_positions(index: ERIndex, occs: Iterable[Occurrence]) -> list[Occurrence]:
    """Fill ``text_position`` from each occurrence's starting factor.

    Raises:
        CorruptionError: If an occurrence names a factor outside its factorization
    """
    resolved = []
    for occ in occs:
        if occ.text_position >= 0:
            resolved.append(occ)
            continue
        source = index.source(index.ordinal_of(occ.individual_id))
        if source is None:
            continue
        if not 0 <= occ.fact_ind < source.factor_count:
            raise CorruptionError(
                f"Occurrence in factor {occ.fact_ind} of {occ.individual_id} "
                f"with {source.factor_count} factors"
            )
        position = source.factor_start(occ.fact_ind) + occ.fact_off
        resolved.append(occ.model_copy(update={"text_position": position}))
    return resolved


def locate(index: ERIndex, pattern: str, portfolio: KeyPortfolio | None = None) -> list[Occurrence]:
    """All occurrences of ``pattern`` in the individuals the caller may read.

    Args:
        index: Built or opened ER-index
        pattern: Pattern over {A,C,G,T,N}
        portfolio: Further restricts the search to the individuals it holds keys for

    Returns:
        Occurrences sorted by individual (index order) then position, one per position

    Raises:
        ValidationError: If the pattern is empty or has symbols outside {A,C,G,T,N}
    """
    pattern = validate_pattern(pattern)
    if portfolio is not None:
        index = index.restrict(portfolio)

    internal = find_text_positions(index, locate_internal_occs(index, pattern))
    external = locate_external_occs(index, pattern)

    order = {individual_id: k for k, individual_id in enumerate(index.individual_ids)}
    unique: dict[tuple[int, int], Occurrence] = {}
    for occ in [*internal, *external]:
        unique.setdefault((order[occ.individual_id], occ.text_position), occ)
    return [unique[key] for key in sorted(unique)]
