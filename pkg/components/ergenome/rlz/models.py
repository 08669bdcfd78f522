"""Factor and factorization value types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray  # noqa: TC002

from ergenome.validation.exceptions import ContractViolationError, ValidationError


@dataclass(frozen=True, slots=True)
class Factor:
    """One RLZ factor: a referential part copied from R, then a mismatch symbol.

    Attributes:
        sai_rev_start: R_rev row whose backward scan emits the referential part
        length: Referential part length plus one (the mismatch symbol)
        mc: Mismatch symbol
        sai_rev: R_rev row prefixing the reversed referential part
        sai: R row prefixing the referential part
        tp: Start of the referential part in R

    The three auxiliary keys are ``None`` for mismatch-only factors. Factors
    decoded from storage carry ``tp`` but not ``sai_rev`` or ``sai``.
    """

    sai_rev_start: int
    length: int
    mc: str
    sai_rev: int | None = None
    sai: int | None = None
    tp: int | None = None

    @property
    def ref_length(self) -> int:
        return self.length - 1

    @property
    def is_mismatch_only(self) -> bool:
        return self.length == 1


@dataclass(frozen=True)
class Factorization:
    """RLZ factorization of one individual sequence, split into blocks of ``block_size``.

    Raises:
        ValidationError: If ``block_size`` < 1 or the factor lengths do not sum to
            ``source_length``
    """

    individual_id: str
    factors: tuple[Factor, ...]
    block_size: int
    source_length: int
    starts: NDArray[np.int64] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.block_size < 1:
            raise ValidationError(f"Block size must be >= 1, got {self.block_size}")
        lengths = np.fromiter((f.length for f in self.factors), dtype=np.int64, count=len(self.factors))
        total = int(lengths.sum())
        if total != self.source_length:
            raise ValidationError(
                f"Factor lengths sum to {total}, expected {self.source_length}"
            )
        starts = np.zeros(len(self.factors), dtype=np.int64)
        if lengths.size:
            np.cumsum(lengths[:-1], out=starts[1:])
        object.__setattr__(self, "starts", starts)

    @property
    def factor_count(self) -> int:
        return len(self.factors)

    @property
    def l_max(self) -> int:
        """Maximum factor length, 0 for an empty factorization."""
        return max((f.length for f in self.factors), default=0)

    @property
    def block_count(self) -> int:
        return -(-len(self.factors) // self.block_size)

    def block(self, number: int) -> tuple[Factor, ...]:
        """Factors of block ``number`` (every block but the last holds ``block_size``)."""
        if not 0 <= number < self.block_count:
            raise ContractViolationError(f"Block {number} outside [0, {self.block_count})")
        start = number * self.block_size
        return self.factors[start : start + self.block_size]

    def mismatch_only_ids(self) -> list[int]:
        return [k for k, f in enumerate(self.factors) if f.length == 1]

    def locate_position(self, position: int) -> tuple[int, int]:
        """Map a text position to (factor index, offset within that factor)."""
        if not 0 <= position < self.source_length:
            raise ContractViolationError(
                f"Position {position} outside [0, {self.source_length})"
            )
        index = int(np.searchsorted(self.starts, position, side="right")) - 1
        return index, position - int(self.starts[index])
