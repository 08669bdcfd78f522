"""RLZ component: factorization against a reference, factor decoding, extraction."""

from ergenome.rlz.core import factorize, factorize_parallel, factorize_text
from ergenome.rlz.decode import (
    char_at_via_reverse_index,
    decode_factor,
    extract_text,
    iter_factor_symbols,
    iter_text,
    reference_start,
)
from ergenome.rlz.models import Factor, Factorization

__all__ = [
    "Factor",
    "Factorization",
    "char_at_via_reverse_index",
    "decode_factor",
    "extract_text",
    "factorize",
    "factorize_parallel",
    "factorize_text",
    "iter_factor_symbols",
    "iter_text",
    "reference_start",
]
