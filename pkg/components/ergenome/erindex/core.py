"""The ER-index: factorizations of a population plus three search trees.

An :class:`ERIndex` is either freshly built (factors and trees in memory,
ready to be saved) or opened from a file (blocks and nodes decrypted on
demand). Both expose the same surface to the searcher: per-individual
factor sources, the three trees and the reference indexes.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Self

from ergenome.ebtree import BPlusTree
from ergenome.erindex.sources import MemoryFactorSource, extract_from_source
from ergenome.logging import get_logger
from ergenome.models import TreeKind
from ergenome.rlz import factorize_parallel
from ergenome.validation.core import validate_identifier
from ergenome.validation.exceptions import AuthorizationError, ValidationError

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence
    from types import TracebackType

    from ergenome.crypto import KeyPortfolio
    from ergenome.ebtree import ByteLRUCache, SearchTree
    from ergenome.erindex.protocol import FactorSource
    from ergenome.fm import ReferenceIndex
    from ergenome.models import Occurrence
    from ergenome.rlz import Factorization
    from ergenome.sequence import Sequence as GenomeSequence

logger = get_logger(__name__)


class ERIndex:
    """Encrypted referential index over one reference and a population.

    Attributes:
        reference: FM-indexes of the reference and of its reverse
        individual_ids: Individuals in ordinal order
        block_size: Factors per stored block
        l_max: Longest factor length over all individuals
        tree_order: Order N of the three trees
        trees: Reverse (sai_rev), forward (sai) and position (tp) trees
    """

    def __init__(
        self,
        *,
        reference: ReferenceIndex,
        individual_ids: Sequence[str],
        block_size: int,
        l_max: int,
        tree_order: int,
        sources: Sequence[FactorSource | None],
        trees: dict[TreeKind, SearchTree],
        factorizations: Sequence[Factorization] | None = None,
        cache: ByteLRUCache | None = None,
        parallel_splits: bool = False,
        workers: int = 1,
        on_close: Callable[[], None] | None = None,
    ) -> None:
        self.reference = reference
        self.individual_ids = list(individual_ids)
        self.block_size = block_size
        self.l_max = l_max
        self.tree_order = tree_order
        self.trees = trees
        self.factorizations = list(factorizations) if factorizations is not None else None
        self.cache = cache
        self.parallel_splits = parallel_splits
        self.workers = workers
        self._sources = list(sources)
        self._on_close = on_close

    def __enter__(self) -> Self:
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()

    def close(self) -> None:
        """Release the backing file of an opened index; no-op for built ones."""
        if self._on_close is not None:
            self._sources = [None] * len(self._sources)
            self.trees = {}
            callback, self._on_close = self._on_close, None
            callback()

    def clear_cache(self) -> None:
        """Drop decrypted blocks and tree nodes, so the next query decrypts again."""
        if self.cache is not None:
            self.cache.clear()

    @property
    def authorized_ordinals(self) -> list[int]:
        return [k for k, source in enumerate(self._sources) if source is not None]

    @property
    def authorized_ids(self) -> list[str]:
        return [self.individual_ids[k] for k in self.authorized_ordinals]

    def source(self, ordinal: int) -> FactorSource | None:
        """Factor source of ``ordinal``; None when the caller holds no key for it."""
        return self._sources[ordinal] if 0 <= ordinal < len(self._sources) else None

    def ordinal_of(self, individual_id: str) -> int:
        try:
            return self.individual_ids.index(individual_id)
        except ValueError as e:
            raise ValidationError(f"Individual {individual_id} is not in this index") from e

    def restrict(self, portfolio: KeyPortfolio) -> ERIndex:
        """View of this index limited to the individuals ``portfolio`` holds keys for."""
        sources = [
            source if source is not None and individual_id in portfolio.individual_keys else None
            for individual_id, source in zip(self.individual_ids, self._sources, strict=True)
        ]
        return ERIndex(
            reference=self.reference,
            individual_ids=self.individual_ids,
            block_size=self.block_size,
            l_max=self.l_max,
            tree_order=self.tree_order,
            sources=sources,
            trees=self.trees,
            factorizations=self.factorizations,
            cache=self.cache,
            parallel_splits=self.parallel_splits,
            workers=self.workers,
        )

    def locate(self, pattern: str) -> list[Occurrence]:
        """Sorted, deduplicated occurrences of ``pattern`` in authorized individuals."""
        from ergenome.erindex.search import locate  # noqa: PLC0415

        return locate(self, pattern)

    def extract(
        self,
        individual_id: str,
        start: int,
        length: int,
        portfolio: KeyPortfolio | None = None,
    ) -> str:
        """Substring of one individual's sequence.

        Raises:
            AuthorizationError: If the caller holds no key for the individual
            ValidationError: If the range is outside the sequence
        """
        view = self if portfolio is None else self.restrict(portfolio)
        source = view.source(self.ordinal_of(individual_id))
        if source is None:
            raise AuthorizationError(f"No key for individual {individual_id}")
        return extract_from_source(source, self.reference.fm_rev, start, length)

    def sequence_length(self, individual_id: str) -> int:
        source = self.source(self.ordinal_of(individual_id))
        if source is None:
            raise AuthorizationError(f"No key for individual {individual_id}")
        return source.source_length


def build_trees(
    factorizations: Sequence[Factorization], order: int
) -> dict[TreeKind, BPlusTree]:
    """Bulk-load every factor with a referential part into the three trees."""
    entries: dict[TreeKind, list[tuple[int, int, int]]] = {kind: [] for kind in TreeKind}
    for ordinal, fz in enumerate(factorizations):
        for factor_id, factor in enumerate(fz.factors):
            if factor.length == 1:
                continue
            if factor.sai_rev is None or factor.sai is None or factor.tp is None:
                raise ValidationError(
                    f"Factor {factor_id} of {fz.individual_id} lacks its search keys"
                )
            entries[TreeKind.REVERSE].append((factor.sai_rev, ordinal, factor_id))
            entries[TreeKind.FORWARD].append((factor.sai, ordinal, factor_id))
            entries[TreeKind.POSITION].append((factor.tp, ordinal, factor_id))
    return {kind: BPlusTree.bulk_load(entries[kind], order).finalize() for kind in TreeKind}


def build_index(
    collection: Sequence[GenomeSequence],
    reference: ReferenceIndex,
    portfolio: KeyPortfolio,
    block_size: int = 128,
    tree_order: int = 256,
    workers: int = 1,
    *,
    parallel_splits: bool = False,
) -> ERIndex:
    """Factorize ``collection`` against ``reference`` and build the three trees.

    Args:
        collection: One sequence per individual, in ordinal order
        reference: Reference indexes the sequences are factorized against
        portfolio: Must hold the key of every individual
        block_size: Factors per block
        tree_order: Order N of the trees
        workers: Factorization processes
        parallel_splits: Evaluate split points on a thread pool at search time

    Raises:
        ValidationError: On an empty collection or duplicate individual ids
        AuthorizationError: If an individual has no key in ``portfolio``
    """
    if not collection:
        raise ValidationError("Cannot build an index over an empty collection")
    ids = [validate_identifier(seq.id, "individual id") for seq in collection]
    duplicates = sorted({i for i in ids if ids.count(i) > 1})
    if duplicates:
        raise ValidationError(f"Duplicate individual ids: {', '.join(duplicates)}")
    for individual_id in ids:
        portfolio.require_key(individual_id)

    factorizations = factorize_parallel(
        collection, reference.fm_rev, reference.fm, reference.tables, block_size, workers
    )
    trees = build_trees(factorizations, tree_order)
    l_max = max(fz.l_max for fz in factorizations)
    logger.info(
        "Index built",
        reference_id=reference.reference_id,
        individuals=len(ids),
        factors=sum(fz.factor_count for fz in factorizations),
        l_max=l_max,
    )
    return ERIndex(
        reference=reference,
        individual_ids=ids,
        block_size=block_size,
        l_max=l_max,
        tree_order=tree_order,
        sources=[MemoryFactorSource(fz) for fz in factorizations],
        trees=dict(trees),
        factorizations=factorizations,
        parallel_splits=parallel_splits,
        workers=workers,
    )
