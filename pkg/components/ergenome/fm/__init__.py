"""FM-index component: suffix arrays, FM-index primitives, correspondence tables."""

from ergenome.fm.core import (
    C,
    FMIndex,
    Interval,
    Occ,
    backward_search,
    backward_step,
    build_fm_index,
    build_fm_index_from_suffix_array,
    eof_shift,
    get_position_in_reference,
    is_in_ref,
    remap,
    search_pat_rev,
)
from ergenome.fm.reference import (
    ReferenceIndex,
    build_reference_index,
    build_reference_index_from_config,
    dump_reference_index,
    load_reference_index,
    parse_reference_index,
    save_reference_index,
    text_hash,
)
from ergenome.fm.suffix_array import build_suffix_array, inverse_permutation
from ergenome.fm.tables import (
    CorrespondenceTables,
    build_correspondence_tables,
    tables_from_suffix_arrays,
)

__all__ = [
    "C",
    "CorrespondenceTables",
    "FMIndex",
    "Interval",
    "Occ",
    "ReferenceIndex",
    "backward_search",
    "backward_step",
    "build_correspondence_tables",
    "build_fm_index",
    "build_fm_index_from_suffix_array",
    "build_reference_index",
    "build_reference_index_from_config",
    "build_suffix_array",
    "dump_reference_index",
    "eof_shift",
    "get_position_in_reference",
    "inverse_permutation",
    "is_in_ref",
    "load_reference_index",
    "parse_reference_index",
    "remap",
    "save_reference_index",
    "search_pat_rev",
    "tables_from_suffix_arrays",
    "text_hash",
]
