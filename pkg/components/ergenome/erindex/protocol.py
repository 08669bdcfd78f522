"""Factor source protocol.

The searcher reads factorizations through this protocol so that it runs
unchanged over a freshly built index (factors in memory) and over an
opened index file (blocks decrypted on first touch).
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Protocol

if TYPE_CHECKING:
    from ergenome.rlz import Factor


class FactorSource(Protocol):
    """Random access to one individual's factorization.

    Examples:
        >>> from ergenome.erindex import MemoryFactorSource
        >>> source: FactorSource = MemoryFactorSource(factorization)  # doctest: +SKIP
    """

    individual_id: str

    @property
    def factor_count(self) -> int: ...

    @property
    def source_length(self) -> int: ...

    def factor(self, index: int) -> Factor:
        """Stored triple of factor ``index``.

        Raises:
            CorruptionError: If ``index`` is outside the factorization
        """
        ...

    def factor_start(self, index: int) -> int:
        """Text position of the first symbol of factor ``index``."""
        ...

    def locate_position(self, position: int) -> tuple[int, int]:
        """(factor index, offset) of a text position."""
        ...

    def mismatch_only_ids(self, symbol: str | None = None) -> list[int]:
        """Ascending ids of the factors without a referential part.

        With ``symbol``, only those whose mismatch symbol it is; answered from the
        factorization header without touching any block.
        """
        ...
