"""ER-index component: assembly, encrypted persistence and pattern search."""

from ergenome.erindex.blocks import (
    DRIFT_WINDOW,
    MC_ALPHABET,
    FactorizationHeader,
    decode_block,
    decode_factorization_header,
    encode_block,
    encode_blocks,
    encode_factorization_header,
    group_mismatch_only,
)
from ergenome.erindex.core import ERIndex, build_index, build_trees
from ergenome.erindex.protocol import FactorSource
from ergenome.erindex.search import (
    find_left_side_factors,
    find_right_side_factors,
    find_text_positions,
    locate,
    locate_external_occs,
    locate_internal_occs,
    pat_rem_part,
)
from ergenome.erindex.sources import (
    EncryptedFactorSource,
    MemoryFactorSource,
    extract_from_source,
    iter_source_text,
    matches_at,
)
from ergenome.erindex.storage import (
    DEFAULT_CACHE_BYTES,
    FORMAT_VERSION,
    MAGIC,
    IndexHeader,
    IndexStats,
    dump_index,
    index_stats,
    open_index,
    save_index,
)

__all__ = [
    "DEFAULT_CACHE_BYTES",
    "DRIFT_WINDOW",
    "FORMAT_VERSION",
    "MAGIC",
    "MC_ALPHABET",
    "ERIndex",
    "EncryptedFactorSource",
    "FactorSource",
    "FactorizationHeader",
    "IndexHeader",
    "IndexStats",
    "MemoryFactorSource",
    "build_index",
    "build_trees",
    "decode_block",
    "decode_factorization_header",
    "dump_index",
    "encode_block",
    "encode_blocks",
    "encode_factorization_header",
    "extract_from_source",
    "find_left_side_factors",
    "find_right_side_factors",
    "find_text_positions",
    "group_mismatch_only",
    "index_stats",
    "iter_source_text",
    "locate",
    "locate_external_occs",
    "locate_internal_occs",
    "matches_at",
    "open_index",
    "pat_rem_part",
    "save_index",
]
