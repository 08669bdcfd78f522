"""In-memory B+ tree of order N used while an index is being built.

Every node except the root holds between N and 2N keys. Leaves hold each
distinct key once with the list of its values; a value is the couple
(individual ordinal, factor id). Leaves are chained left to right.

After :meth:`BPlusTree.finalize` the tree is read-only: value lists are
sorted and nodes numbered (leaves first, left to right, then index nodes
in post-order so the root comes last).
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from itertools import pairwise
from typing import TYPE_CHECKING, NamedTuple, Protocol

from ergenome.validation.exceptions import ContractViolationError, ValidationError

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator


class TreeEntry(NamedTuple):
    """One (key, value) couple returned by a range query."""

    key: int
    individual: int
    factor_id: int


@dataclass(slots=True, eq=False)
class LeafNode:
    keys: list[int] = field(default_factory=list)
    values: list[list[tuple[int, int]]] = field(default_factory=list)
    next: LeafNode | None = None
    number: int = -1


@dataclass(slots=True, eq=False)
class IndexNode:
    keys: list[int] = field(default_factory=list)
    children: list[LeafNode | IndexNode] = field(default_factory=list)
    number: int = -1


Node = LeafNode | IndexNode


class SearchTree(Protocol):
    """Query surface shared by the in-memory and the stored tree."""

    def search_for_leaf(self, value: int) -> int | None: ...

    def range_query(self, low: int, high: int) -> list[TreeEntry]: ...


def group_by_individual(entries: list[TreeEntry]) -> dict[int, list[int]]:
    """Factor ids of ``entries`` grouped by individual ordinal, each list ascending."""
    grouped: dict[int, list[int]] = {}
    for entry in entries:
        grouped.setdefault(entry.individual, []).append(entry.factor_id)
    return {individual: sorted(ids) for individual, ids in sorted(grouped.items())}


def get_factors_in_range(tree: SearchTree, low: int, high: int) -> dict[int, list[int]]:
    """Factor ids stored under keys in ``[low, high]``, grouped by individual."""
    if low > high:
        return {}
    return group_by_individual(tree.range_query(low, high))


def _chunk_bounds(total: int, full: int, minimum: int) -> list[tuple[int, int]]:
    """Cut ``range(total)`` into runs of ``full``, evening out a short last run."""
    bounds = [(start, min(start + full, total)) for start in range(0, total, full)]
    if len(bounds) > 1 and bounds[-1][1] - bounds[-1][0] < minimum:
        start = bounds[-2][0]
        middle = start + (total - start + 1) // 2
        bounds[-2:] = [(start, middle), (middle, total)]
    return bounds


class BPlusTree:
    """Order-N B+ tree mapping integer keys to (individual, factor id) couples.

    Examples:
        >>> tree = BPlusTree(order=2)
        >>> for key in (5, 1, 3):
        ...     tree.insert(key, 0, key * 10)
        >>> [e.factor_id for e in tree.range_query(2, 5)]
        [30, 50]
    """

    def __init__(self, order: int = 256) -> None:
        if order < 2:
            raise ValidationError(f"Tree order must be >= 2, got {order}")
        self.order = order
        self.root: Node = LeafNode()
        self.depth = 1
        self.entry_count = 0
        self.nodes: list[Node] = []
        self.leaf_count = 0
        self._finalized = False

    # ------------------------------------------------------------------
    # Build
    # ------------------------------------------------------------------

    @classmethod
    def bulk_load(cls, entries: Iterable[tuple[int, int, int]], order: int = 256) -> BPlusTree:
        """Build a tree bottom-up from ``(key, individual, factor_id)`` triples.

        Nodes are filled to 2N keys, so the tree holds the same couples as
        one built by :meth:`insert` in fewer, fuller nodes.

        Examples:
            >>> tree = BPlusTree.bulk_load([(key, 0, key) for key in range(9)], order=2)
            >>> [len(leaf.keys) for leaf in tree.iter_leaves()]
            [4, 3, 2]
        """
        tree = cls(order)
        keys: list[int] = []
        values: list[list[tuple[int, int]]] = []
        for key, individual, factor_id in sorted(entries):
            if key < 0:
                raise ValidationError(f"Tree keys are non-negative, got {key}")
            if keys and keys[-1] == key:
                values[-1].append((individual, factor_id))
            else:
                keys.append(key)
                values.append([(individual, factor_id)])
            tree.entry_count += 1
        if not keys:
            return tree

        full = 2 * order
        leaves = [
            LeafNode(keys=keys[start:end], values=values[start:end])
            for start, end in _chunk_bounds(len(keys), full, order)
        ]
        for left, right in pairwise(leaves):
            left.next = right
        level: list[tuple[int, Node]] = [(leaf.keys[0], leaf) for leaf in leaves]
        while len(level) > 1:
            parents: list[tuple[int, Node]] = []
            for start, end in _chunk_bounds(len(level), full + 1, order + 1):
                group = level[start:end]
                node = IndexNode(
                    keys=[low for low, _ in group[1:]], children=[child for _, child in group]
                )
                parents.append((group[0][0], node))
            level = parents
            tree.depth += 1
        tree.root = level[0][1]
        return tree

    def insert(self, key: int, individual: int, factor_id: int) -> None:
        """Add the couple ``(individual, factor_id)`` under ``key``."""
        if self._finalized:
            raise ContractViolationError("Cannot insert into a finalized tree")
        if key < 0:
            raise ValidationError(f"Tree keys are non-negative, got {key}")

        path: list[IndexNode] = []
        node = self.root
        while isinstance(node, IndexNode):
            path.append(node)
            node = node.children[bisect_right(node.keys, key)]

        pos = bisect_left(node.keys, key)
        self.entry_count += 1
        if pos < len(node.keys) and node.keys[pos] == key:
            node.values[pos].append((individual, factor_id))
            return
        node.keys.insert(pos, key)
        node.values.insert(pos, [(individual, factor_id)])
        if len(node.keys) > 2 * self.order:
            self._split_leaf(node, path)

    def _split_leaf(self, leaf: LeafNode, path: list[IndexNode]) -> None:
        n = self.order
        right = LeafNode(keys=leaf.keys[n:], values=leaf.values[n:], next=leaf.next)
        del leaf.keys[n:]
        del leaf.values[n:]
        leaf.next = right
        self._insert_in_parent(leaf, right.keys[0], right, path)

    def _insert_in_parent(self, left: Node, separator: int, right: Node, path: list[IndexNode]) -> None:
        if not path:
            self.root = IndexNode(keys=[separator], children=[left, right])
            self.depth += 1
            return
        parent = path.pop()
        pos = bisect_right(parent.keys, separator)
        parent.keys.insert(pos, separator)
        parent.children.insert(pos + 1, right)
        if len(parent.keys) > 2 * self.order:
            n = self.order
            pushed = parent.keys[n]
            sibling = IndexNode(keys=parent.keys[n + 1 :], children=parent.children[n + 1 :])
            del parent.keys[n:]
            del parent.children[n + 1 :]
            self._insert_in_parent(parent, pushed, sibling, path)

    def finalize(self) -> BPlusTree:
        """Sort value lists and number the nodes; idempotent."""
        if self._finalized:
            return self
        leaves = list(self.iter_leaves())
        for number, leaf in enumerate(leaves):
            leaf.number = number
            for values in leaf.values:
                values.sort()
        index_nodes: list[IndexNode] = []
        self._collect_index_nodes(self.root, index_nodes)
        for number, node in enumerate(index_nodes, start=len(leaves)):
            node.number = number
        self.nodes = [*leaves, *index_nodes]
        self.leaf_count = len(leaves)
        self._finalized = True
        return self

    def _collect_index_nodes(self, node: Node, out: list[IndexNode]) -> None:
        if isinstance(node, IndexNode):
            for child in node.children:
                self._collect_index_nodes(child, out)
            out.append(node)

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self.nodes) if self._finalized else sum(1 for _ in self.iter_nodes())

    def iter_nodes(self) -> Iterator[Node]:
        stack: list[Node] = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, IndexNode):
                stack.extend(reversed(node.children))

    def iter_leaves(self) -> Iterator[LeafNode]:
        node = self.root
        while isinstance(node, IndexNode):
            node = node.children[0]
        leaf: LeafNode | None = node
        while leaf is not None:
            yield leaf
            leaf = leaf.next

    def _find_leaf(self, value: int) -> LeafNode:
        node = self.root
        while isinstance(node, IndexNode):
            node = node.children[bisect_right(node.keys, value)]
        return node

    def search_for_leaf(self, value: int) -> int | None:
        """Number of the leaf where ``value`` resides or would reside; None if empty."""
        if self.entry_count == 0:
            return None
        leaf = self._find_leaf(value)
        if self._finalized:
            return leaf.number
        return next(k for k, candidate in enumerate(self.iter_leaves()) if candidate is leaf)

    def range_query(self, low: int, high: int) -> list[TreeEntry]:
        """All couples under keys in ``[low, high]`` in key order."""
        if low > high or self.entry_count == 0:
            return []
        entries: list[TreeEntry] = []
        leaf: LeafNode | None = self._find_leaf(low)
        while leaf is not None:
            start = bisect_left(leaf.keys, low)
            for key, values in zip(leaf.keys[start:], leaf.values[start:], strict=True):
                if key > high:
                    return entries
                entries.extend(TreeEntry(key, ind, fid) for ind, fid in sorted(values))
            leaf = leaf.next
        return entries

    def get_factors_in_range(self, low: int, high: int) -> dict[int, list[int]]:
        return get_factors_in_range(self, low, high)

    def check_invariants(self) -> None:
        """Verify depth, occupancy and key order.

        Raises:
            ContractViolationError: On the first violated invariant
        """
        leaf_depths: set[int] = set()
        self._check_node(self.root, 1, leaf_depths, is_root=True)
        if len(leaf_depths) > 1:
            raise ContractViolationError(f"Leaves at different depths: {sorted(leaf_depths)}")
        previous = -1
        for leaf in self.iter_leaves():
            for key in leaf.keys:
                if key <= previous:
                    raise ContractViolationError("Leaf keys are not strictly increasing")
                previous = key

    def _check_node(self, node: Node, depth: int, leaf_depths: set[int], *, is_root: bool) -> None:
        count = len(node.keys)
        upper = 2 * self.order
        lower = 0 if is_root and isinstance(node, LeafNode) else 1 if is_root else self.order
        if not lower <= count <= upper:
            raise ContractViolationError(f"Node with {count} keys outside [{lower}, {upper}]")
        if isinstance(node, LeafNode):
            leaf_depths.add(depth)
            return
        if len(node.children) != count + 1:
            raise ContractViolationError("Index node child count must be key count + 1")
        for child in node.children:
            self._check_node(child, depth + 1, leaf_depths, is_root=False)
