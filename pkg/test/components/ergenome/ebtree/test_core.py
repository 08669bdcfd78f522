"""Tests for the in-memory B+ tree, invariable coding and the byte-bounded cache."""

from __future__ import annotations

import numpy as np
import pytest

from ergenome.codec import BinaryReader, BinaryWriter
from ergenome.ebtree import (
    BPlusTree,
    ByteLRUCache,
    LeafNode,
    TreeEntry,
    decode_node_invariable,
    encode_node_invariable,
    get_factors_in_range,
    group_by_individual,
    permutation_from_rank,
    permutation_rank,
    read_sorted_run,
    write_sorted_run,
)
from ergenome.validation import ContractViolationError, IndexFormatError, ValidationError


def _random_entries(count: int, seed: int) -> list[TreeEntry]:
    rng = np.random.Generator(np.random.PCG64(seed))
    keys = rng.integers(0, 400, size=count)
    individuals = rng.integers(0, 3, size=count)
    return [TreeEntry(int(k), int(i), fid) for fid, (k, i) in enumerate(zip(keys, individuals, strict=True))]


def _tree_of(entries: list[TreeEntry], order: int) -> BPlusTree:
    tree = BPlusTree(order=order)
    for entry in entries:
        tree.insert(entry.key, entry.individual, entry.factor_id)
    return tree


class TestBPlusTree:
    """Tests for BPlusTree."""

    @pytest.mark.parametrize("order", [2, 3, 8, 64])
    def test_range_queries_match_sorted_scan(self, order: int) -> None:
        """Test range results equal filtering the sorted entries."""
        entries = _random_entries(600, seed=order)
        tree = _tree_of(entries, order)
        tree.check_invariants()
        ordered = sorted(entries)

        for low, high in [(0, 399), (17, 17), (50, 120), (398, 1000), (-5, 3), (200, 100)]:
            expected = [e for e in ordered if low <= e.key <= high]
            assert tree.range_query(low, high) == expected

    def test_small_example(self) -> None:
        """Test a three-key tree."""
        tree = BPlusTree(order=2)
        for key in (5, 1, 3):
            tree.insert(key, 0, key * 10)

        assert [e.factor_id for e in tree.range_query(2, 5)] == [30, 50]

    def test_duplicate_keys_share_a_slot(self) -> None:
        """Test repeated keys collect their values under one key."""
        tree = _tree_of([TreeEntry(7, 1, 4), TreeEntry(7, 0, 9), TreeEntry(7, 1, 2)], order=2)

        assert tree.range_query(7, 7) == [TreeEntry(7, 0, 9), TreeEntry(7, 1, 2), TreeEntry(7, 1, 4)]
        assert tree.entry_count == 3

    def test_depth_grows_with_splits(self) -> None:
        """Test an order-2 tree over many keys has several levels."""
        tree = _tree_of([TreeEntry(k, 0, k) for k in range(200)], order=2)
        tree.check_invariants()

        assert tree.depth >= 3

    def test_finalize_numbers_leaves_first(self) -> None:
        """Test leaves take numbers left to right and the root comes last."""
        tree = _tree_of(_random_entries(300, seed=5), order=3).finalize()
        leaves = list(tree.iter_leaves())

        assert [leaf.number for leaf in leaves] == list(range(len(leaves)))
        assert tree.leaf_count == len(leaves)
        assert tree.root.number == tree.node_count - 1
        assert [node.number for node in tree.nodes] == list(range(tree.node_count))
        assert tree.finalize() is tree

    def test_search_for_leaf(self) -> None:
        """Test the returned leaf holds the key, or would hold it."""
        tree = _tree_of([TreeEntry(k, 0, k) for k in range(0, 300, 3)], order=3).finalize()
        leaves = {leaf.number: leaf for leaf in tree.iter_leaves()}

        for value in (0, 3, 150, 297):
            assert value in leaves[tree.search_for_leaf(value)].keys  # type: ignore[index]
        number = tree.search_for_leaf(151)
        assert number is not None
        leaf = leaves[number]
        assert leaf.keys[0] <= 151
        assert leaf.next is None or leaf.next.keys[0] > 151

    def test_search_before_finalize(self) -> None:
        """Test leaf lookup also works while the tree is being built."""
        tree = _tree_of([TreeEntry(k, 0, k) for k in range(40)], order=2)

        assert tree.search_for_leaf(0) == 0

    def test_empty_tree(self) -> None:
        """Test queries on a tree without entries."""
        tree = BPlusTree(order=4)

        assert tree.search_for_leaf(10) is None
        assert tree.range_query(0, 100) == []
        tree.check_invariants()

    def test_invalid_inputs(self) -> None:
        """Test order, negative keys and inserts after finalize."""
        with pytest.raises(ValidationError, match="order"):
            BPlusTree(order=1)
        tree = BPlusTree(order=2)
        with pytest.raises(ValidationError, match="non-negative"):
            tree.insert(-1, 0, 0)
        tree.finalize()
        with pytest.raises(ContractViolationError, match="finalized"):
            tree.insert(1, 0, 0)

    def test_check_invariants_detects_disorder(self) -> None:
        """Test unsorted leaf keys are reported."""
        tree = _tree_of([TreeEntry(k, 0, k) for k in (1, 2, 3)], order=2)
        assert isinstance(tree.root, LeafNode)
        tree.root.keys.reverse()

        with pytest.raises(ContractViolationError, match="strictly increasing"):
            tree.check_invariants()

    def test_check_invariants_detects_underfull_node(self) -> None:
        """Test a non-root node below the minimum occupancy is reported."""
        tree = _tree_of([TreeEntry(k, 0, k) for k in range(30)], order=2)
        leaf = next(tree.iter_leaves())
        del leaf.keys[1:]
        del leaf.values[1:]

        with pytest.raises(ContractViolationError, match="outside"):
            tree.check_invariants()


class TestBulkLoad:
    """Tests for BPlusTree.bulk_load."""

    @pytest.mark.parametrize("order", [2, 3, 8, 64])
    def test_matches_inserted_tree(self, order: int) -> None:
        """Test a bulk-loaded tree answers every range like an inserted one."""
        entries = _random_entries(600, seed=order + 10)
        loaded = BPlusTree.bulk_load(entries, order=order)
        inserted = _tree_of(entries, order)
        loaded.check_invariants()

        assert loaded.entry_count == inserted.entry_count
        for low, high in [(0, 399), (17, 17), (50, 120), (398, 1000), (200, 100)]:
            assert loaded.range_query(low, high) == inserted.range_query(low, high)

    @pytest.mark.parametrize("count", [1, 4, 5, 9, 17, 26, 100, 1000])
    def test_occupancy_at_awkward_sizes(self, count: int) -> None:
        """Test every node stays within [N, 2N] keys whatever the key count."""
        tree = BPlusTree.bulk_load([(k, 0, k) for k in range(count)], order=2).finalize()
        tree.check_invariants()

        assert [e.key for e in tree.range_query(0, count)] == list(range(count))
        assert tree.root.number == tree.node_count - 1

    def test_leaves_are_full(self) -> None:
        """Test bulk loading uses fewer leaves than one-by-one inserts."""
        entries = [TreeEntry(k, 0, k) for k in range(500)]
        loaded = BPlusTree.bulk_load(entries, order=4).finalize()
        inserted = _tree_of(entries, order=4).finalize()

        assert loaded.leaf_count == 63
        assert loaded.leaf_count < inserted.leaf_count

    def test_empty_and_negative(self) -> None:
        """Test an empty load gives an empty tree and negative keys are refused."""
        tree = BPlusTree.bulk_load([], order=3)

        assert tree.search_for_leaf(1) is None
        with pytest.raises(ValidationError, match="non-negative"):
            BPlusTree.bulk_load([(-2, 0, 0)], order=3)


class TestGrouping:
    """Tests for group_by_individual and get_factors_in_range."""

    def test_group_by_individual(self) -> None:
        """Test factor ids are grouped per individual and sorted."""
        entries = [TreeEntry(1, 2, 9), TreeEntry(1, 0, 5), TreeEntry(4, 2, 3)]

        assert group_by_individual(entries) == {0: [5], 2: [3, 9]}

    def test_get_factors_in_range(self) -> None:
        """Test the grouped view over a key range, empty for an inverted range."""
        tree = _tree_of([TreeEntry(1, 0, 10), TreeEntry(5, 1, 11), TreeEntry(9, 0, 12)], order=2)

        assert get_factors_in_range(tree, 0, 5) == {0: [10], 1: [11]}
        assert tree.get_factors_in_range(9, 9) == {0: [12]}
        assert get_factors_in_range(tree, 6, 2) == {}


class TestInvariableCoding:
    """Tests for the invariable run coding."""

    def test_header_layout(self) -> None:
        """Test first value, count and difference width lead the payload."""
        payload = encode_node_invariable([100, 103, 109])

        assert int.from_bytes(payload[:8], "little") == 100
        assert int.from_bytes(payload[8:12], "little") == 3
        assert payload[12] == 4
        assert len(payload) == 13 + 1

    @pytest.mark.parametrize("keys", [[], [42], [0, 0, 0], [5, 9, 2**40, 2**63]])
    def test_decode_inverts_encode(self, keys: list[int]) -> None:
        """Test empty, single, constant and wide runs."""
        assert decode_node_invariable(encode_node_invariable(keys)) == keys

    def test_unsorted_keys(self) -> None:
        """Test descending runs are refused."""
        with pytest.raises(ValidationError, match="sorted"):
            encode_node_invariable([3, 1])

    @pytest.mark.parametrize("values", [[7], [3, 3, 8], [0, 1, 2, 1000], [2**40, 2**40 + 5]])
    def test_sorted_run_omits_count(self, values: list[int]) -> None:
        """Test a sorted run reads back given its count."""
        writer = BinaryWriter()
        write_sorted_run(writer, values)
        reader = BinaryReader(writer.getvalue())

        assert read_sorted_run(reader, len(values)) == values
        assert reader.remaining == 0

    def test_sorted_run_is_smaller_than_node_run(self) -> None:
        """Test the run drops the u64 first value and the u32 count."""
        writer = BinaryWriter()
        write_sorted_run(writer, [100, 103, 109])

        assert writer.getvalue() == bytes([100, 4]) + encode_node_invariable([100, 103, 109])[13:]


class TestPermutationRank:
    """Tests for permutation_rank and permutation_from_rank."""

    def test_lexicographic_ranks(self) -> None:
        """Test all permutations of three items rank 0 to 5 in order."""
        orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]

        assert [permutation_rank(order) for order in orders] == list(range(6))
        assert [permutation_from_rank(rank, 3) for rank in range(6)] == orders

    def test_large_permutation(self) -> None:
        """Test ranks beyond 64 bits come back to the same order."""
        rng = np.random.Generator(np.random.PCG64(4))
        order = rng.permutation(40).tolist()

        assert permutation_from_rank(permutation_rank(order), 40) == order

    def test_not_a_permutation(self) -> None:
        """Test repeated or out-of-range items are refused."""
        with pytest.raises(ValidationError, match="permutation"):
            permutation_rank([0, 0])
        with pytest.raises(ValidationError, match="permutation"):
            permutation_rank([1, 2])

    def test_rank_out_of_range(self) -> None:
        """Test a rank of size! or more is a format error."""
        with pytest.raises(IndexFormatError, match="out of range"):
            permutation_from_rank(6, 3)



class TestByteLRUCache:
    """Tests for ByteLRUCache."""

    def test_evicts_least_recently_used(self) -> None:
        """Test the oldest untouched entry leaves first."""
        cache = ByteLRUCache(100)
        cache.put("a", 1, 40)
        cache.put("b", 2, 40)
        assert cache.get("a") == 1
        cache.put("c", 3, 40)

        assert cache.get("b") is None
        assert cache.get("a") == 1
        assert cache.get("c") == 3
        assert cache.size_bytes == 80

    def test_counts_hits_and_misses(self) -> None:
        """Test lookups are tallied."""
        cache = ByteLRUCache(10)
        cache.put("k", "v", 1)
        cache.get("k")
        cache.get("x")

        assert (cache.hits, cache.misses) == (1, 1)

    def test_oversized_entry_not_stored(self) -> None:
        """Test entries larger than the capacity are dropped."""
        cache = ByteLRUCache(10)
        cache.put("big", b"x", 11)

        assert len(cache) == 0
        assert cache.size_bytes == 0

    def test_replace_and_clear(self) -> None:
        """Test replacing an entry updates the size and clear empties the cache."""
        cache = ByteLRUCache(100)
        cache.put("a", 1, 30)
        cache.put("a", 2, 50)

        assert cache.size_bytes == 50
        assert cache.get("a") == 2
        cache.clear()
        assert len(cache) == 0
        assert cache.size_bytes == 0
