"""EB+ tree component: B+ trees with invariable-coded, encrypted nodes."""

from ergenome.ebtree.cache import ByteLRUCache
from ergenome.ebtree.coding import (
    decode_node_invariable,
    encode_node_invariable,
    permutation_from_rank,
    permutation_rank,
    read_invariable,
    read_sorted_run,
    write_invariable,
    write_sorted_run,
)
from ergenome.ebtree.core import (
    BPlusTree,
    IndexNode,
    LeafNode,
    SearchTree,
    TreeEntry,
    get_factors_in_range,
    group_by_individual,
)
from ergenome.ebtree.storage import (
    MAX_NODES,
    EncryptedTree,
    StoredIndexNode,
    StoredLeaf,
    decode_partition,
    directory_length,
    encode_partition,
    load_tree,
    save_tree,
)

__all__ = [
    "MAX_NODES",
    "BPlusTree",
    "ByteLRUCache",
    "EncryptedTree",
    "IndexNode",
    "LeafNode",
    "SearchTree",
    "StoredIndexNode",
    "StoredLeaf",
    "TreeEntry",
    "decode_node_invariable",
    "decode_partition",
    "directory_length",
    "encode_node_invariable",
    "encode_partition",
    "get_factors_in_range",
    "group_by_individual",
    "load_tree",
    "permutation_from_rank",
    "permutation_rank",
    "read_invariable",
    "read_sorted_run",
    "save_tree",
    "write_invariable",
    "write_sorted_run",
]
