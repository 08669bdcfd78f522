"""Tests for encrypted tree sections and lazy stored-tree queries."""

from __future__ import annotations

from typing import TYPE_CHECKING
from unittest.mock import patch

import numpy as np
import pytest

from ergenome.codec import BinaryReader
from ergenome.crypto import NonceLedger, generate_key, salsa20_xor
from ergenome.ebtree import (
    BPlusTree,
    ByteLRUCache,
    StoredLeaf,
    TreeEntry,
    decode_partition,
    directory_length,
    encode_partition,
    load_tree,
    read_sorted_run,
    save_tree,
)
from ergenome.models import TreeKind
from ergenome.validation import AuthorizationError, IndexFormatError, NonceReuseError, NonceSpaceError

if TYPE_CHECKING:
    from ergenome.crypto import SymmetricKey

    KeySet = tuple[SymmetricKey, list[SymmetricKey]]


def _build_tree(order: int = 3, count: int = 400, seed: int = 1) -> BPlusTree:
    rng = np.random.Generator(np.random.PCG64(seed))
    tree = BPlusTree(order=order)
    for factor_id, (key, individual) in enumerate(
        zip(rng.integers(0, 500, size=count), rng.integers(0, 3, size=count), strict=True)
    ):
        tree.insert(int(key), int(individual), factor_id)
    return tree.finalize()


@pytest.fixture(scope="module")
def tree() -> BPlusTree:
    """Order-3 tree over three individuals."""
    return _build_tree()


@pytest.fixture(scope="module")
def keys() -> KeySet:
    """System key and one key per individual ordinal."""
    return generate_key(), [generate_key() for _ in range(3)]


@pytest.fixture(scope="module")
def section(tree: BPlusTree, keys: KeySet) -> bytes:
    """The tree saved as the forward tree."""
    system_key, individual_keys = keys
    return save_tree(tree, TreeKind.FORWARD, system_key, individual_keys)


class TestSaveTree:
    """Tests for save_tree."""

    def test_every_nonce_is_recorded_once(self, tree: BPlusTree, keys: KeySet) -> None:
        """Test the directory, every node and every partition use distinct nonces."""
        system_key, individual_keys = keys
        ledger = NonceLedger()
        save_tree(tree, TreeKind.REVERSE, system_key, individual_keys, ledger)

        partitions = sum(
            len({individual for values in leaf.values for individual, _ in values})
            for leaf in tree.iter_leaves()
        )
        assert len(ledger) == 1 + tree.node_count + partitions

    def test_kinds_have_separate_nonce_ranges(self, tree: BPlusTree, keys: KeySet) -> None:
        """Test all three trees can share a ledger, a second save of one kind cannot."""
        system_key, individual_keys = keys
        ledger = NonceLedger()
        for kind in TreeKind:
            save_tree(tree, kind, system_key, individual_keys, ledger)

        with pytest.raises(NonceReuseError):
            save_tree(tree, TreeKind.POSITION, system_key, individual_keys, ledger)

    def test_node_limit(self, tree: BPlusTree, keys: KeySet) -> None:
        """Test trees too large for their nonce range are refused."""
        system_key, individual_keys = keys
        with (
            patch("ergenome.ebtree.storage.MAX_NODES", 3),
            pytest.raises(NonceSpaceError, match="limit is 2"),
        ):
            save_tree(tree, TreeKind.FORWARD, system_key, individual_keys)

    def test_missing_individual_key(self, tree: BPlusTree, keys: KeySet) -> None:
        """Test saving needs the key of every ordinal in the tree."""
        system_key, individual_keys = keys
        with pytest.raises(AuthorizationError, match="ordinal 2"):
            save_tree(tree, TreeKind.FORWARD, system_key, individual_keys[:2])

    def test_directory_length(self, section: bytes) -> None:
        """Test the varint prefix covers the directory ciphertext."""
        reader = BinaryReader(section)
        length = reader.varint()

        assert directory_length(section) == reader.position + length
        assert 1 <= reader.position <= 3


class TestEncryptedTree:
    """Tests for load_tree and EncryptedTree queries."""

    def test_directory_fields(
        self, tree: BPlusTree, section: bytes, keys: KeySet
    ) -> None:
        """Test the decrypted directory describes the saved tree."""
        system_key, individual_keys = keys
        stored = load_tree(section, TreeKind.FORWARD, system_key, individual_keys)

        assert stored.node_count == tree.node_count
        assert stored.leaf_count == tree.leaf_count
        assert stored.root == tree.root.number
        assert stored.depth == tree.depth
        assert stored.order == 3
        assert stored.entry_count == tree.entry_count

    @pytest.mark.parametrize(("low", "high"), [(0, 499), (10, 10), (123, 321), (480, 10_000), (9, 3)])
    def test_range_query_matches_memory(
        self,
        tree: BPlusTree,
        section: bytes,
        keys: KeySet,
        low: int,
        high: int,
    ) -> None:
        """Test stored queries return what the in-memory tree returns."""
        system_key, individual_keys = keys
        stored = load_tree(section, TreeKind.FORWARD, system_key, individual_keys)

        assert stored.range_query(low, high) == tree.range_query(low, high)
        assert stored.get_factors_in_range(low, high) == tree.get_factors_in_range(low, high)

    def test_search_for_leaf_matches_memory(
        self, tree: BPlusTree, section: bytes, keys: KeySet
    ) -> None:
        """Test leaf lookups descend to the same leaf."""
        system_key, individual_keys = keys
        stored = load_tree(section, TreeKind.FORWARD, system_key, individual_keys)

        for value in (0, 77, 250, 499, 600):
            assert stored.search_for_leaf(value) == tree.search_for_leaf(value)

    def test_unauthorized_individual_is_skipped(
        self, tree: BPlusTree, section: bytes, keys: KeySet
    ) -> None:
        """Test partitions of individuals without a key are left out."""
        system_key, individual_keys = keys
        stored = load_tree(
            section, TreeKind.FORWARD, system_key, [individual_keys[0], None, individual_keys[2]]
        )

        result = stored.range_query(0, 499)

        assert result == [e for e in tree.range_query(0, 499) if e.individual != 1]
        assert stored.skipped_partitions["no_key"] > 0
        assert stored.skipped_partitions["checksum"] == 0

    def test_wrong_individual_key_fails_check(
        self, tree: BPlusTree, section: bytes, keys: KeySet
    ) -> None:
        """Test a partition decrypted with the wrong key is skipped, not misread."""
        system_key, individual_keys = keys
        swapped = [individual_keys[0], generate_key(), individual_keys[2]]
        stored = load_tree(section, TreeKind.FORWARD, system_key, swapped)

        result = stored.range_query(0, 499)

        assert all(entry.individual != 1 for entry in result)
        assert stored.skipped_partitions["checksum"] > 0

    def test_damaged_partition_is_skipped(
        self, tree: BPlusTree, section: bytes, keys: KeySet
    ) -> None:
        """Test a corrupted partition hides only its own entries."""
        system_key, individual_keys = keys
        stored = load_tree(section, TreeKind.FORWARD, system_key, individual_keys)
        leaf = stored.node(0)
        assert isinstance(leaf, StoredLeaf)
        ordinal = min(leaf.spans)
        _, end = stored.partition_span(0, ordinal)
        damaged = bytearray(section)
        damaged[end - 1] ^= 0xFF

        reloaded = load_tree(bytes(damaged), TreeKind.FORWARD, system_key, individual_keys)
        result = reloaded.range_query(0, 499)

        first_leaf = next(tree.iter_leaves())
        lost = {
            TreeEntry(key, individual, factor_id)
            for key, values in zip(first_leaf.keys, first_leaf.values, strict=True)
            for individual, factor_id in values
            if individual == ordinal
        }
        assert result == [e for e in tree.range_query(0, 499) if e not in lost]
        assert reloaded.skipped_partitions["checksum"] == 1

    def test_partition_span_of_absent_individual(
        self, section: bytes, keys: KeySet
    ) -> None:
        """Test asking for a partition an index node cannot have."""
        system_key, individual_keys = keys
        stored = load_tree(section, TreeKind.FORWARD, system_key, individual_keys)
        with pytest.raises(IndexFormatError, match="no partition"):
            stored.partition_span(stored.root, 0)

    def test_wrong_system_key(self, section: bytes, keys: KeySet) -> None:
        """Test the directory does not parse under another system key."""
        _, individual_keys = keys
        with pytest.raises(IndexFormatError):
            load_tree(section, TreeKind.FORWARD, generate_key(), individual_keys)

    def test_wrong_kind(self, section: bytes, keys: KeySet) -> None:
        """Test a section opened as another tree kind is unreadable."""
        system_key, individual_keys = keys
        with pytest.raises(IndexFormatError):
            load_tree(section, TreeKind.REVERSE, system_key, individual_keys)

    def test_node_out_of_range(self, section: bytes, keys: KeySet) -> None:
        """Test node numbers past the directory are format errors."""
        system_key, individual_keys = keys
        stored = load_tree(section, TreeKind.FORWARD, system_key, individual_keys)
        with pytest.raises(IndexFormatError, match="outside"):
            stored.node(stored.node_count)

    def test_cache_serves_repeated_queries(self, section: bytes, keys: KeySet) -> None:
        """Test decrypted nodes and partitions are reused from the cache."""
        system_key, individual_keys = keys
        cache = ByteLRUCache(1 << 20)
        stored = load_tree(section, TreeKind.FORWARD, system_key, individual_keys, cache)

        first = stored.range_query(100, 200)
        hits_before = cache.hits
        second = stored.range_query(100, 200)

        assert first == second
        assert cache.hits > hits_before
        assert cache.size_bytes > 0

    def test_empty_tree(self, keys: KeySet) -> None:
        """Test an empty tree saves and answers no entries."""
        system_key, individual_keys = keys
        data = save_tree(BPlusTree(order=2), TreeKind.POSITION, system_key, individual_keys)
        stored = load_tree(data, TreeKind.POSITION, system_key, individual_keys)

        assert stored.search_for_leaf(5) is None
        assert stored.range_query(0, 100) == []


class TestLeafPartitions:
    """Tests for the sorted, rank-carrying leaf partitions."""

    @pytest.mark.parametrize("ids", [[4], [1, 2, 3], [9, 3, 5], [50, 40, 30, 20, 10], [7, 7, 2]])
    def test_decode_restores_slot_order(self, ids: list[int]) -> None:
        """Test ids come back in the order the leaf slots hold them."""
        assert decode_partition(encode_partition(ids), len(ids)) == ids

    def test_sorted_partition_has_no_rank(self) -> None:
        """Test ascending ids cost only the sorted run."""
        ascending = encode_partition([10, 20, 30])

        assert len(encode_partition([30, 20, 10])) == len(ascending) + 1
        assert decode_partition(ascending, 3) == [10, 20, 30]

    def test_descending_run_is_a_format_error(self) -> None:
        """Test a run whose differences decrease is refused."""
        payload = bytes([10, 4, 0x50])  # first 10, width 4, differences 5 then 0

        with pytest.raises(IndexFormatError, match="ascending"):
            decode_partition(payload, 3)

    def test_saved_tree_round_trip(self, keys: KeySet) -> None:
        """Test a tree whose ids run against its keys saves sorted and reads back exactly."""
        system_key, individual_keys = keys
        tree = BPlusTree.bulk_load(
            [(key, key % 3, 1000 - key) for key in range(300)], order=4
        ).finalize()
        data = save_tree(tree, TreeKind.REVERSE, system_key, individual_keys)
        stored = load_tree(data, TreeKind.REVERSE, system_key, individual_keys)

        assert stored.range_query(0, 299) == tree.range_query(0, 299)
        assert stored.skipped_partitions["checksum"] == 0

        leaf = stored.node(0)
        assert isinstance(leaf, StoredLeaf)
        start, end = stored.partition_span(0, 0)
        plain = salsa20_xor(
            individual_keys[0], TreeKind.REVERSE.base_nonce + 1, data[start:end]
        )
        run = read_sorted_run(BinaryReader(plain), len(leaf.slot_keys[0]))
        assert run == sorted(run)
        assert run[0] == 1000 - max(int(k) for k in leaf.slot_keys[0])
