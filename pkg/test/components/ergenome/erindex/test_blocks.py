"""Tests for factor blocks, factorization headers and factor sources."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from ergenome.codec import BinaryWriter
from ergenome.crypto import generate_key, salsa20_xor
from ergenome.ebtree import ByteLRUCache
from ergenome.erindex import (
    DRIFT_WINDOW,
    EncryptedFactorSource,
    FactorizationHeader,
    MemoryFactorSource,
    decode_block,
    decode_factorization_header,
    encode_block,
    encode_blocks,
    encode_factorization_header,
    extract_from_source,
    matches_at,
    open_index,
)
from ergenome.erindex.blocks import header_for
from ergenome.rlz import Factor
from ergenome.validation import (
    AuthorizationError,
    ContractViolationError,
    CorruptionError,
    IndexFormatError,
)

if TYPE_CHECKING:
    from pathlib import Path

    from ergenome.crypto import KeyPortfolio, SymmetricKey
    from ergenome.erindex import ERIndex
    from ergenome.fm import ReferenceIndex
    from ergenome.rlz import Factorization

# Any table of n + 1 rows serves for block coding; reversed so rows differ from positions.
ROWS = np.arange(2000, dtype=np.int64)[::-1].copy()


def _first_factorization(index: ERIndex) -> Factorization:
    assert index.factorizations is not None
    return index.factorizations[0]


def _section(fz: Factorization, key: SymmetricKey, blocks: list[bytes]) -> memoryview:
    header = encode_factorization_header(header_for(fz, [len(block) for block in blocks]))
    header_ct = salsa20_xor(key, 0, header)
    writer = BinaryWriter()
    writer.varint(len(header_ct))
    writer.raw(header_ct)
    for number, block in enumerate(blocks):
        writer.raw(salsa20_xor(key, number + 1, block))
    return memoryview(writer.getvalue())


def _source(
    fz: Factorization, blocks: list[bytes], index: ERIndex, cache: ByteLRUCache | None = None
) -> EncryptedFactorSource:
    key = generate_key()
    return EncryptedFactorSource(
        "ind_1",
        _section(fz, key, blocks),
        key,
        cache if cache is not None else ByteLRUCache(1 << 20),
        index.reference.start_rows,
    )


def _as_stored(factor: Factor) -> Factor:
    return Factor(factor.sai_rev_start, factor.length, factor.mc, tp=factor.tp)


def _round_trip(factors: list[Factor], block_start: int) -> list[Factor]:
    return decode_block(encode_block(factors, block_start), len(factors), block_start, ROWS)


class TestBlocks:
    """Tests for encode_block and decode_block."""

    def test_stored_fields_survive(self) -> None:
        """Test length, symbol and reference position are kept; the other keys are not."""
        factors = [Factor(0, 3, "A", 1, 2, tp=40), Factor(0, 1, "N"), Factor(0, 70, "T", tp=100)]

        decoded = _round_trip(factors, block_start=10)

        assert decoded == [
            Factor(int(ROWS[40]), 3, "A", tp=40),
            Factor(0, 1, "N"),
            Factor(int(ROWS[100]), 70, "T", tp=100),
        ]

    def test_substitutions_only_cost_no_drift_codes(self) -> None:
        """Test factors on one diagonal store the diagonal once and zero-width codes."""
        factors = [Factor(0, 10, "A", tp=1000 + 10 * k) for k in range(8)]
        data = encode_block(factors, 0)

        # lengths (base 10, width 0), codes (base 0, width 0), diagonal 1000, width 0
        assert data == bytes([10, 0, 0, 0]) + bytes([0xD0, 0x0F, 0])
        assert decode_block(data, 8, 0, ROWS) == [_as_stored(f) for f in factors]

    @pytest.mark.parametrize(
        "diagonals",
        [
            [0, 0, -5, -5, 3],
            [500, 500, 2, 500, 500],
            [-300, 700, 700, 1200, -300],
            [7],
        ],
    )
    def test_drift_round_trip(self, diagonals: list[int]) -> None:
        """Test shifted, jumping and negative diagonals come back exactly."""
        start = 400
        factors = []
        for k, diagonal in enumerate(diagonals):
            length = 5 if k % 2 else 60
            factors.append(Factor(0, length, "ACGT"[k % 4], tp=start + diagonal))
            start += length

        assert _round_trip(factors, block_start=400) == [_as_stored(f) for f in factors]

    def test_short_chance_match_keeps_anchor(self) -> None:
        """Test a short factor far off the diagonal costs one escape, not its successors."""
        steady = [Factor(0, 50, "A", tp=100 + 50 * k) for k in range(6)]
        chance = Factor(0, 8, "C", tp=1500)
        shifted = [Factor(0, 50, "A", tp=100 + 50 * k + 8) for k in range(3, 6)]
        factors = [*steady[:3], chance, *shifted]
        assert chance.ref_length < DRIFT_WINDOW

        with_chance = encode_block(factors, 0)
        on_diagonal = encode_block([*steady[:3], Factor(0, 8, "C", tp=250), *factors[4:]], 0)

        assert _round_trip(factors, 0) == [_as_stored(f) for f in factors]
        assert len(with_chance) - len(on_diagonal) <= 3

    def test_referential_factor_needs_position(self) -> None:
        """Test a referential factor without tp cannot be stored."""
        with pytest.raises(ContractViolationError, match="no reference position"):
            encode_block([Factor(4, 3, "A")], 0)

    def test_unstorable_symbol(self) -> None:
        """Test symbols outside the mismatch alphabet are refused."""
        with pytest.raises(CorruptionError, match="cannot be stored"):
            encode_block([Factor(0, 2, "X", tp=0)], 0)

    def test_invalid_symbol_code(self) -> None:
        """Test codes past the alphabet are corruption."""
        writer = BinaryWriter()
        writer.packed([1])
        writer.packed([6])

        with pytest.raises(CorruptionError, match="symbol code"):
            decode_block(writer.getvalue(), 1, 0, ROWS)

    def test_position_outside_reference(self) -> None:
        """Test a decoded reference position past the table is corruption."""
        data = encode_block([Factor(0, 30, "G", tp=1990)], 0)

        with pytest.raises(CorruptionError, match="outside the reference"):
            decode_block(data, 1, 0, ROWS)

    def test_truncated_block(self) -> None:
        """Test a short block is a format error."""
        data = encode_block([Factor(0, 4, "C", tp=9)] * 4, 0)

        with pytest.raises(IndexFormatError):
            decode_block(data[:-1], 4, 0, ROWS)


class TestFactorizationHeader:
    """Tests for the factorization header."""

    def test_block_factor_count(self) -> None:
        """Test every block but the last is full."""
        header = FactorizationHeader(
            factor_count=19,
            block_size=8,
            source_length=100,
            block_offsets=np.array([0, 5, 10, 15], dtype=np.int64),
            block_starts=np.array([0, 40, 80], dtype=np.int64),
            mismatch_only_by_symbol={},
        )

        assert header.block_count == 3
        assert [header.block_factor_count(n) for n in range(3)] == [8, 8, 3]

    def test_encode_decode(self, built_index: ERIndex) -> None:
        """Test the header of a built factorization survives encoding."""
        fz = _first_factorization(built_index)
        header = header_for(fz, [10] * fz.block_count)

        decoded = decode_factorization_header(encode_factorization_header(header))

        assert decoded.factor_count == fz.factor_count
        assert decoded.source_length == fz.source_length
        assert decoded.mismatch_only == tuple(fz.mismatch_only_ids())
        assert np.array_equal(decoded.block_starts, fz.starts[::8])
        assert np.array_equal(decoded.block_offsets, np.arange(fz.block_count + 1) * 10)

    def test_mismatch_only_ids_by_symbol(self) -> None:
        """Test mismatch-only ids are kept per symbol and merged on request."""
        header = FactorizationHeader(
            factor_count=12,
            block_size=4,
            source_length=40,
            block_offsets=np.array([0, 6, 12, 20], dtype=np.int64),
            block_starts=np.array([0, 13, 29], dtype=np.int64),
            mismatch_only_by_symbol={"A": (3, 9), "N": (4,)},
        )

        decoded = decode_factorization_header(encode_factorization_header(header))

        assert decoded.mismatch_only_by_symbol == {"A": (3, 9), "N": (4,)}
        assert decoded.mismatch_only_ids("A") == [3, 9]
        assert decoded.mismatch_only_ids("C") == []
        assert decoded.mismatch_only_ids() == [3, 4, 9]
        assert decoded.block_starts.tolist() == [0, 13, 29]
        assert decoded.block_offsets.tolist() == [0, 6, 12, 20]

    @pytest.mark.parametrize("position", [0, -1, -9])
    def test_damaged_header(self, built_index: ERIndex, position: int) -> None:
        """Test any flipped byte fails the check."""
        fz = _first_factorization(built_index)
        plain = bytearray(encode_factorization_header(header_for(fz, [1] * fz.block_count)))
        plain[position] ^= 0x10

        with pytest.raises(IndexFormatError, match="check failed"):
            decode_factorization_header(bytes(plain))

    def test_too_short(self) -> None:
        """Test input shorter than the check bytes."""
        with pytest.raises(IndexFormatError):
            decode_factorization_header(b"abc")


class TestEncryptedFactorSource:
    """Tests for sources decrypted from a stored section."""

    def test_agrees_with_memory_source(
        self,
        built_index: ERIndex,
        saved_index_path: Path,
        portfolio: KeyPortfolio,
        reference_index: ReferenceIndex,
    ) -> None:
        """Test every factor, start and position lookup matches the built index."""
        with open_index(saved_index_path, portfolio, reference_index) as opened:
            for ordinal in range(len(built_index.individual_ids)):
                memory = built_index.source(ordinal)
                stored = opened.source(ordinal)
                assert memory is not None
                assert stored is not None
                assert stored.factor_count == memory.factor_count
                assert stored.source_length == memory.source_length
                assert stored.mismatch_only_ids() == memory.mismatch_only_ids()
                for symbol in "ACGTN":
                    assert stored.mismatch_only_ids(symbol) == memory.mismatch_only_ids(symbol)
                for factor_id in range(memory.factor_count):
                    assert stored.factor(factor_id) == _as_stored(memory.factor(factor_id))
                    assert stored.factor_start(factor_id) == memory.factor_start(factor_id)
                for position in range(0, memory.source_length, 97):
                    assert stored.locate_position(position) == memory.locate_position(position)

    def test_wrong_individual_key(
        self, saved_index_path: Path, portfolio: KeyPortfolio, reference_index: ReferenceIndex
    ) -> None:
        """Test a wrong key is reported as an authorization failure, not as data."""
        forged = portfolio.with_keys({"ind_1": generate_key()})
        with open_index(saved_index_path, forged, reference_index) as opened:
            source = opened.source(0)
            assert source is not None
            with pytest.raises(AuthorizationError, match="factorization of ind_1"):
                _ = source.factor_count

    def test_damaged_block(self, built_index: ERIndex) -> None:
        """Test a block with an impossible symbol code is corruption."""
        fz = _first_factorization(built_index)
        bad = BinaryWriter()
        bad.packed([1] * 8)
        bad.packed([7] * 8)
        blocks = [bad.getvalue(), *encode_blocks(fz)[1:]]
        source = _source(fz, blocks, built_index)

        assert source.factor(8) == _as_stored(fz.factors[8])
        with pytest.raises(CorruptionError, match="Block 0 of ind_1"):
            source.factor(0)

    def test_index_checks(self, built_index: ERIndex) -> None:
        """Test factor ids and positions outside the factorization."""
        fz = _first_factorization(built_index)
        source = _source(fz, encode_blocks(fz), built_index)

        with pytest.raises(CorruptionError):
            source.factor(fz.factor_count)
        with pytest.raises(CorruptionError):
            source.factor_start(-1)
        with pytest.raises(CorruptionError):
            source.locate_position(fz.source_length)

    def test_blocks_are_cached(self, built_index: ERIndex) -> None:
        """Test a block is decrypted once while it stays in the cache."""
        fz = _first_factorization(built_index)
        cache = ByteLRUCache(1 << 20)
        source = _source(fz, encode_blocks(fz), built_index, cache)

        source.factor(1)
        source.factor(2)

        assert (cache.misses, cache.hits) == (1, 1)

    def test_mismatch_only_ids_need_no_block(self, built_index: ERIndex) -> None:
        """Test per-symbol mismatch-only ids come from the header alone."""
        fz = _first_factorization(built_index)
        cache = ByteLRUCache(1 << 20)
        source = _source(fz, encode_blocks(fz), built_index, cache)
        memory = MemoryFactorSource(fz)

        for symbol in "ACGTN":
            assert source.mismatch_only_ids(symbol) == [
                k for k in fz.mismatch_only_ids() if fz.factors[k].mc == symbol
            ]
            assert source.mismatch_only_ids(symbol) == memory.mismatch_only_ids(symbol)
        assert cache.misses == 0

class TestSourceText:
    """Tests for matches_at and extract_from_source."""

    def test_matches_at(self, built_index: ERIndex) -> None:
        """Test matching text, a mismatch, the empty string and out-of-range starts."""
        source = built_index.source(2)
        assert source is not None
        fm_rev = built_index.reference.fm_rev
        text = extract_from_source(source, fm_rev, 0, source.source_length)
        flipped = "A" if text[50] != "A" else "C"

        assert matches_at(source, fm_rev, 40, text[40:80])
        assert not matches_at(source, fm_rev, 40, text[40:50] + flipped)
        assert matches_at(source, fm_rev, 10**6, "")
        assert not matches_at(source, fm_rev, -1, text[:3])
        assert not matches_at(source, fm_rev, source.source_length - 2, text[-2:] + "A")
