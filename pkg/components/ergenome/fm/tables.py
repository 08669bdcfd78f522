"""Correspondence tables between the reference and reverse-reference indexes.

``r2f[i]`` is the row of the reference index whose suffix starts at the
same symbol as reverse-index row ``i``: reverse position ``p`` maps to
reference position ``n - 1 - p``. The terminator rows map to each other.
``f2r`` is the inverse permutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ergenome.fm.suffix_array import inverse_permutation
from ergenome.validation.exceptions import ContractViolationError

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from ergenome.fm.core import FMIndex


@dataclass(frozen=True, slots=True)
class CorrespondenceTables:
    """Mutually inverse row permutations over ``[0, n]``."""

    r2f: NDArray[np.int64]
    f2r: NDArray[np.int64]

    def rev_to_fwd(self, row: int) -> int:
        return int(self.r2f[row])

    def fwd_to_rev(self, row: int) -> int:
        return int(self.f2r[row])


def tables_from_suffix_arrays(
    sa: NDArray[np.int64], sa_rev: NDArray[np.int64]
) -> CorrespondenceTables:
    """Vectorised construction from both terminator-inclusive suffix arrays."""
    if sa.size != sa_rev.size:
        raise ContractViolationError(
            f"Suffix arrays of different lengths: {sa.size} vs {sa_rev.size}"
        )
    rows = sa.size
    n = rows - 1
    isa = inverse_permutation(sa)
    # reverse position p starts at reference position n-1-p; -1 (terminator) wraps to n
    r2f = isa[(n - 1 - sa_rev) % rows]
    return CorrespondenceTables(r2f=r2f, f2r=inverse_permutation(r2f))


def _inverse_suffix_array(fm: FMIndex) -> NDArray[np.int64]:
    isa = np.empty(fm.rows, dtype=np.int64)
    row = 0
    isa[fm.text_len] = row
    for pos in range(fm.text_len - 1, -1, -1):
        row = fm.backward_step(row)
        isa[pos] = row
    return isa


def build_correspondence_tables(fm: FMIndex, fm_rev: FMIndex) -> CorrespondenceTables:
    """Build R2F/F2R from the two indexes alone by LF-walking each text once.

    Raises:
        ContractViolationError: If the indexed texts differ in length
    """
    if fm.text_len != fm_rev.text_len:
        raise ContractViolationError(
            f"Index lengths differ: {fm.text_len} vs {fm_rev.text_len}"
        )
    sa = inverse_permutation(_inverse_suffix_array(fm))
    sa_rev = inverse_permutation(_inverse_suffix_array(fm_rev))
    return tables_from_suffix_arrays(sa, sa_rev)
