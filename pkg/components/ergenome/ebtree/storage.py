"""Encrypted persistence of finalized trees and lazy access to stored ones.

Tree section::

    directory length varint | directory ciphertext | node record 0 | node record 1 | ...

The directory (system key, base nonce) holds the node and leaf counts, the
root number, depth, order and entry count as varints, the byte size of every
node record frame-of-reference coded, and a 4-byte SHA-256 check. A node
record is::

    key length varint | key section ciphertext
    | partition count varint | partition lengths varint... | partition ciphertexts...

The key section (system key, base nonce + node number + 1) holds the node
kind, the invariable-coded keys and either the children numbers (index
node) or, per key, its value count and the individual ordinal of every
value (leaf). Each leaf partition holds one individual's factor ids,
encrypted under that individual's key with the node's nonce::

    sorted run of the ids | rank of their slot order | 2-byte SHA-256 check

The sorted run is invariable-coded without its count, which the key section
gives. The rank takes the remaining bytes and is empty when the slot order
is already ascending. Individuals without a key, and partitions that fail
their check, are skipped.
"""

from __future__ import annotations

import hashlib
import threading
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from itertools import pairwise
from typing import TYPE_CHECKING

import numpy as np

from ergenome.codec import BinaryReader, BinaryWriter
from ergenome.crypto import NonceLedger, salsa20_xor
from ergenome.ebtree.coding import (
    permutation_from_rank,
    permutation_rank,
    rank_bytes,
    read_invariable,
    read_sorted_run,
    write_invariable,
    write_sorted_run,
)
from ergenome.ebtree.core import BPlusTree, IndexNode, LeafNode, TreeEntry, get_factors_in_range
from ergenome.logging import get_logger
from ergenome.validation.exceptions import (
    AuthorizationError,
    IndexFormatError,
    NonceSpaceError,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray

    from ergenome.crypto import SymmetricKey
    from ergenome.ebtree.cache import ByteLRUCache
    from ergenome.models import TreeKind

logger = get_logger(__name__)

MAX_NODES = 10_000_000
_LEAF = 0
_INDEX = 1
_CHECK = 2
_DIRECTORY_CHECK = 4


def _check(payload: bytes, size: int = _CHECK) -> bytes:
    return hashlib.sha256(payload).digest()[:size]


# ----------------------------------------------------------------------
# Save
# ----------------------------------------------------------------------


def _leaf_sections(leaf: LeafNode) -> tuple[bytes, dict[int, list[int]]]:
    writer = BinaryWriter()
    writer.u8(_LEAF)
    write_invariable(writer, leaf.keys)
    writer.packed([len(values) for values in leaf.values])
    ordinals: list[int] = []
    partitions: dict[int, list[int]] = {}
    for values in leaf.values:
        for individual, factor_id in values:
            ordinals.append(individual)
            partitions.setdefault(individual, []).append(factor_id)
    writer.packed(ordinals)
    return writer.getvalue(), partitions


def _index_section(node: IndexNode) -> bytes:
    writer = BinaryWriter()
    writer.u8(_INDEX)
    write_invariable(writer, node.keys)
    writer.packed([child.number for child in node.children])
    return writer.getvalue()


def encode_partition(factor_ids: Sequence[int]) -> bytes:
    """Plain partition payload (check excluded) for ids given in slot order.

    Examples:
        >>> encode_partition([3, 5, 9]) == encode_partition([9, 3, 5])
        False
        >>> decode_partition(encode_partition([9, 3, 5]), 3)
        [9, 3, 5]
    """
    order = np.argsort(np.asarray(factor_ids, dtype=np.uint64), kind="stable")
    slots = np.empty(len(factor_ids), dtype=np.int64)
    slots[order] = np.arange(len(factor_ids))
    writer = BinaryWriter()
    write_sorted_run(writer, sorted(factor_ids))
    writer.raw(rank_bytes(permutation_rank(slots.tolist())))
    return writer.getvalue()


def decode_partition(payload: bytes, count: int) -> list[int]:
    """Inverse of :func:`encode_partition` for a partition of ``count`` ids.

    Raises:
        IndexFormatError: If the payload is not a well-formed partition
    """
    reader = BinaryReader(payload)
    ascending = read_sorted_run(reader, count)
    if len(ascending) != count or any(b < a for a, b in pairwise(ascending)):
        raise IndexFormatError("Partition ids are not an ascending run")
    rank = int.from_bytes(reader.raw(reader.remaining), "little")
    return [ascending[slot] for slot in permutation_from_rank(rank, count)]


def save_tree(
    tree: BPlusTree,
    kind: TreeKind,
    system_key: SymmetricKey,
    individual_keys: Sequence[SymmetricKey],
    ledger: NonceLedger | None = None,
) -> bytes:
    """Serialize and encrypt ``tree`` as one tree section.

    Args:
        tree: Tree to save (finalized here if needed)
        kind: Which tree this is; fixes the base nonce
        system_key: Key of directory and key sections
        individual_keys: Key of every individual ordinal appearing in the tree
        ledger: Records each (key, nonce) pair used

    Raises:
        NonceSpaceError: If the tree has 10,000,000 nodes or more
        AuthorizationError: If an ordinal in the tree has no key
    """
    tree.finalize()
    if tree.node_count >= MAX_NODES:
        raise NonceSpaceError(f"{kind} tree has {tree.node_count} nodes, limit is {MAX_NODES - 1}")
    ledger = ledger or NonceLedger()
    base = kind.base_nonce

    records = BinaryWriter()
    sizes = []
    for node in tree.nodes:
        start = len(records)
        nonce = base + node.number + 1
        if isinstance(node, LeafNode):
            key_section, partitions = _leaf_sections(node)
        else:
            key_section, partitions = _index_section(node), {}
        ciphertext = ledger.encrypt(system_key, nonce, key_section)
        records.varint(len(ciphertext))
        records.raw(ciphertext)

        records.varint(len(partitions))
        ciphertexts = []
        for individual in sorted(partitions):
            if individual >= len(individual_keys):
                raise AuthorizationError(f"No key for individual ordinal {individual}")
            payload = encode_partition(partitions[individual])
            sealed = payload + _check(payload)
            ciphertexts.append(ledger.encrypt(individual_keys[individual], nonce, sealed))
        for ciphertext in ciphertexts:
            records.varint(len(ciphertext))
        for ciphertext in ciphertexts:
            records.raw(ciphertext)
        sizes.append(len(records) - start)

    directory = BinaryWriter()
    header = (tree.node_count, tree.leaf_count, tree.root.number, tree.depth, tree.order)
    for value in (*header, tree.entry_count):
        directory.varint(value)
    directory.packed(sizes)
    plain = directory.getvalue()

    section = BinaryWriter()
    ciphertext = ledger.encrypt(system_key, base, plain + _check(plain, _DIRECTORY_CHECK))
    section.varint(len(ciphertext))
    section.raw(ciphertext)
    section.raw(records.getvalue())
    data = section.getvalue()
    logger.debug(
        "Tree saved",
        kind=str(kind),
        node_count=tree.node_count,
        depth=tree.depth,
        size=len(data),
    )
    return data


def directory_length(section: bytes | memoryview) -> int:
    """Bytes taken by the directory (prefix included) at the start of a tree section."""
    reader = BinaryReader(section)
    length = reader.varint()
    return reader.position + length


# ----------------------------------------------------------------------
# Load
# ----------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class StoredIndexNode:
    keys: list[int]
    children: list[int]


@dataclass(frozen=True, slots=True)
class StoredLeaf:
    keys: list[int]
    slot_keys: dict[int, NDArray[np.uint64]]
    spans: dict[int, tuple[int, int]]


class EncryptedTree:
    """Read-only view of a stored tree; nodes are decrypted on first touch.

    The directory is decrypted at construction. Decrypted nodes and
    partitions go to ``cache`` when one is given.
    """

    def __init__(
        self,
        section: bytes | memoryview,
        kind: TreeKind,
        system_key: SymmetricKey,
        individual_keys: Sequence[SymmetricKey | None],
        cache: ByteLRUCache | None = None,
    ) -> None:
        self._section = memoryview(section)
        self.kind = kind
        self._system_key = system_key
        self._individual_keys = list(individual_keys)
        self._cache = cache
        self._lock = threading.Lock()
        self.skipped_partitions: Counter[str] = Counter()

        reader = BinaryReader(self._section)
        plain = salsa20_xor(system_key, kind.base_nonce, reader.raw(reader.varint()))
        self._nodes_base = reader.position
        payload, check = plain[:-_DIRECTORY_CHECK], plain[-_DIRECTORY_CHECK:]
        if len(plain) < _DIRECTORY_CHECK or _check(payload, _DIRECTORY_CHECK) != check:
            raise IndexFormatError(f"Unreadable {kind} tree directory")
        try:
            directory = BinaryReader(payload)
            self.node_count = directory.varint()
            self.leaf_count = directory.varint()
            self.root = directory.varint()
            self.depth = directory.varint()
            self.order = directory.varint()
            self.entry_count = directory.varint()
            sizes = directory.packed(self.node_count).astype(np.int64)
        except IndexFormatError as e:
            raise IndexFormatError(f"Unreadable {kind} tree directory") from e
        self._offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
        if self.root >= max(self.node_count, 1) or self._nodes_base + int(self._offsets[-1]) > len(
            self._section
        ):
            raise IndexFormatError(f"Inconsistent {kind} tree directory")

    # ------------------------------------------------------------------
    # Node access
    # ------------------------------------------------------------------

    def _cached(self, key: tuple[object, ...]) -> object | None:
        return self._cache.get(key) if self._cache is not None else None

    def _store(self, key: tuple[object, ...], value: object, size: int) -> None:
        if self._cache is not None:
            self._cache.put(key, value, size)

    def node(self, number: int) -> StoredLeaf | StoredIndexNode:
        """Decrypt and parse node ``number``."""
        cache_key = (str(self.kind), "node", number)
        cached = self._cached(cache_key)
        if cached is not None:
            return cached  # type: ignore[return-value]
        if not 0 <= number < self.node_count:
            raise IndexFormatError(f"Node {number} outside the {self.kind} tree")

        start = self._nodes_base + int(self._offsets[number])
        reader = BinaryReader(self._section, start)
        nonce = self.kind.base_nonce + number + 1
        try:
            plain = salsa20_xor(self._system_key, nonce, reader.raw(reader.varint()))
            parsed = self._parse_node(plain, reader)
        except (IndexFormatError, ValueError) as e:
            raise IndexFormatError(f"Corrupt node {number} of the {self.kind} tree") from e
        logger.debug("Tree node decrypted", kind=str(self.kind), node=number)
        self._store(cache_key, parsed, len(plain) * 8 + 64)
        return parsed

    def _parse_node(self, plain: bytes, reader: BinaryReader) -> StoredLeaf | StoredIndexNode:
        section = BinaryReader(plain)
        kind = section.u8()
        keys = read_invariable(section)
        if kind == _INDEX:
            children = section.packed(len(keys) + 1).tolist()
            return StoredIndexNode(keys=keys, children=children)
        if kind != _LEAF:
            raise IndexFormatError(f"Unknown node kind {kind}")

        counts = section.packed(len(keys))
        ordinals = section.packed(int(counts.sum()))
        slot_key_array = np.repeat(np.asarray(keys, dtype=np.uint64), counts.astype(np.int64))
        slot_keys = {
            int(ordinal): slot_key_array[ordinals == ordinal] for ordinal in np.unique(ordinals)
        }

        partition_count = reader.varint()
        if partition_count != len(slot_keys):
            raise IndexFormatError("Partition table does not match the leaf's individuals")
        lengths = [reader.varint() for _ in range(partition_count)]
        spans = {}
        position = reader.position
        for ordinal, length in zip(sorted(slot_keys), lengths, strict=True):
            spans[ordinal] = (position, position + length)
            position += length
        return StoredLeaf(keys=keys, slot_keys=slot_keys, spans=spans)

    def _skip(self, number: int, ordinal: int, reason: str) -> None:
        with self._lock:
            self.skipped_partitions[reason] += 1
        logger.debug(
            "Leaf partition skipped",
            kind=str(self.kind),
            node=number,
            individual=ordinal,
            reason=reason,
        )

    def _partition(self, number: int, leaf: StoredLeaf, ordinal: int) -> NDArray[np.uint64] | None:
        cache_key = (str(self.kind), "part", number, ordinal)
        cached = self._cached(cache_key)
        if cached is not None:
            return cached  # type: ignore[return-value]

        key = self._individual_keys[ordinal] if ordinal < len(self._individual_keys) else None
        if key is None:
            self._skip(number, ordinal, "no_key")
            return None
        start, end = leaf.spans[ordinal]
        nonce = self.kind.base_nonce + number + 1
        plain = salsa20_xor(key, nonce, bytes(self._section[start:end]))
        payload, check = plain[:-_CHECK], plain[-_CHECK:]
        try:
            if len(plain) < _CHECK or _check(payload) != check:
                raise IndexFormatError("partition check failed")
            factor_ids = np.asarray(
                decode_partition(payload, len(leaf.slot_keys[ordinal])), dtype=np.uint64
            )
        except IndexFormatError:
            self._skip(number, ordinal, "checksum")
            return None
        self._store(cache_key, factor_ids, factor_ids.nbytes + 64)
        return factor_ids

    def partition_span(self, number: int, ordinal: int) -> tuple[int, int]:
        """Byte range of one leaf partition inside the tree section."""
        leaf = self.node(number)
        if not isinstance(leaf, StoredLeaf) or ordinal not in leaf.spans:
            raise IndexFormatError(f"Node {number} has no partition for individual {ordinal}")
        return leaf.spans[ordinal]

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    def search_for_leaf(self, value: int) -> int | None:
        """Number of the leaf where ``value`` resides or would reside; None if empty."""
        if self.entry_count == 0:
            return None
        number = self.root
        node = self.node(number)
        while isinstance(node, StoredIndexNode):
            number = node.children[bisect_right(node.keys, value)]
            node = self.node(number)
        return number

    def range_query(self, low: int, high: int) -> list[TreeEntry]:
        """Authorized couples under keys in ``[low, high]`` in key order."""
        if low > high:
            return []
        first = self.search_for_leaf(low)
        if first is None:
            return []
        entries: list[TreeEntry] = []
        for number in range(first, self.leaf_count):
            leaf = self.node(number)
            if not isinstance(leaf, StoredLeaf):
                raise IndexFormatError(f"Node {number} of the {self.kind} tree is not a leaf")
            if leaf.keys and leaf.keys[0] > high:
                break
            found: list[TreeEntry] = []
            for ordinal, slot_keys in leaf.slot_keys.items():
                mask = (slot_keys >= low) & (slot_keys <= high)
                if not mask.any():
                    continue
                factor_ids = self._partition(number, leaf, ordinal)
                if factor_ids is None:
                    continue
                found.extend(
                    TreeEntry(key, ordinal, factor_id)
                    for key, factor_id in zip(
                        slot_keys[mask].tolist(), factor_ids[mask].tolist(), strict=True
                    )
                )
            found.sort()
            entries.extend(found)
            if leaf.keys and leaf.keys[-1] > high:
                break
        return entries

    def get_factors_in_range(self, low: int, high: int) -> dict[int, list[int]]:
        return get_factors_in_range(self, low, high)


def load_tree(
    section: bytes | memoryview,
    kind: TreeKind,
    system_key: SymmetricKey,
    individual_keys: Sequence[SymmetricKey | None],
    cache: ByteLRUCache | None = None,
) -> EncryptedTree:
    """Open a tree section; only its directory is decrypted now."""
    return EncryptedTree(section, kind, system_key, individual_keys, cache)
