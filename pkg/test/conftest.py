"""Shared pytest fixtures and configuration for all tests.

- A small synthetic reference (random ACGT with an N run) and a mutated
  population built from it
- Reference FM-indexes with small sampling steps so rank checkpoints and
  marked rows are exercised
- A built ER-index, a key portfolio holding every key, and a saved copy
- A naive scan that serves as the search oracle
"""

from __future__ import annotations

from pathlib import Path  # noqa: TC003  # Path is used at runtime for fixtures
from typing import TYPE_CHECKING

import numpy as np
import pytest

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from ergenome.crypto import KeyPortfolio
    from ergenome.erindex import ERIndex
    from ergenome.fm import ReferenceIndex
    from ergenome.sequence import Sequence as GenomeSequence

OracleHits = list[tuple[str, int]]


# Pytest configuration
def pytest_configure(config: pytest.Config) -> None:
    """Configure pytest markers and settings."""
    config.addinivalue_line("markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')")
    config.addinivalue_line("markers", "integration: marks tests as integration tests")
    config.addinivalue_line("markers", "unit: marks tests as unit tests")
    # Desk-scale acceptance runs only with an explicit marker expression.
    if not config.option.markexpr:
        config.option.markexpr = "not slow"


def random_dna(length: int, seed: int) -> str:
    """Uniform random ACGT string, reproducible from ``seed``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return np.frombuffer(b"ACGT", dtype=np.uint8)[rng.integers(0, 4, size=length)].tobytes().decode()


def naive_locate(collection: Sequence[GenomeSequence], pattern: str) -> OracleHits:
    """Every (individual id, start) where ``pattern`` occurs, overlaps included."""
    hits = []
    for member in collection:
        start = member.data.find(pattern)
        while start != -1:
            hits.append((member.id, start))
            start = member.data.find(pattern, start + 1)
    return hits


# ============================================================================
# Sequence Fixtures
# ============================================================================


@pytest.fixture(scope="session")
def reference_text() -> str:
    """Reference of 2,008 symbols: random ACGT around a run of eight N."""
    return random_dna(1500, seed=11) + "N" * 8 + random_dna(500, seed=12)


@pytest.fixture(scope="session")
def population(reference_text: str) -> list[GenomeSequence]:
    """Four individuals mutated from the reference (about 2% edits each)."""
    from ergenome.sequence import MutationProfile, Sequence, generate_population

    reference = Sequence(id="reference", chromosome="chrT", data=reference_text)
    profile = MutationProfile(
        substitution_rate=0.012, insertion_rate=0.004, deletion_rate=0.004, seed=7
    )
    return generate_population(reference, 4, profile, prefix="ind")


# ============================================================================
# Index Fixtures
# ============================================================================


@pytest.fixture(scope="session")
def reference_index(reference_text: str) -> ReferenceIndex:
    """Reference indexes with sample rate 4 and rank checkpoints every 8 symbols."""
    from ergenome.fm import build_reference_index

    return build_reference_index(reference_text, "chrT", sample_rate=4, occ_step=8)


@pytest.fixture(scope="session")
def portfolio(population: list[GenomeSequence]) -> KeyPortfolio:
    """Portfolio holding the system key and the key of every individual."""
    from ergenome.crypto import KeyPortfolio, generate_key

    return KeyPortfolio("admin", generate_key(), {m.id: generate_key() for m in population})


@pytest.fixture(scope="session")
def built_index(
    population: list[GenomeSequence], reference_index: ReferenceIndex, portfolio: KeyPortfolio
) -> ERIndex:
    """In-memory ER-index with 8-factor blocks and order-3 trees (several tree levels)."""
    from ergenome.erindex import build_index

    return build_index(population, reference_index, portfolio, block_size=8, tree_order=3)


@pytest.fixture(scope="session")
def saved_index_path(
    built_index: ERIndex, portfolio: KeyPortfolio, tmp_path_factory: pytest.TempPathFactory
) -> Path:
    """The built index saved to a file."""
    from ergenome.erindex import save_index

    path = tmp_path_factory.mktemp("erindex") / "chrT.erix"
    save_index(built_index, portfolio, path)
    return path


@pytest.fixture(scope="session")
def search_patterns(population: list[GenomeSequence], reference_text: str) -> list[str]:
    """Patterns cut from the individuals and the reference, plus a few absent ones.

    Lengths run from 1 to 60; cuts around the N run are included.
    """
    rng = np.random.Generator(np.random.PCG64(99))
    patterns = {"A", "C", "G", "T", "N", "NN", "NNNNNNNN", "ACGTACGTACGTACGTACGT"}
    for length in (2, 3, 5, 8, 13, 21, 34, 60):
        for member in population:
            for _ in range(3):
                start = int(rng.integers(len(member.data) - length + 1))
                patterns.add(member.data[start : start + length])
        start = int(rng.integers(len(reference_text) - length + 1))
        patterns.add(reference_text[start : start + length])
    n_run = reference_text.index("N")
    patterns.add(reference_text[n_run - 5 : n_run + 3])
    patterns.add(reference_text[n_run + 6 : n_run + 14])
    return sorted(patterns)


@pytest.fixture(scope="session")
def oracle(population: list[GenomeSequence]) -> Callable[[str], OracleHits]:
    """Naive scan over the population, the expected result of every search."""

    def scan(pattern: str) -> OracleHits:
        return naive_locate(population, pattern)

    return scan


# ============================================================================
# File Fixtures
# ============================================================================


@pytest.fixture
def fasta_file(tmp_path: Path) -> Path:
    """Two-record FASTA with wrapped lines, lower case and one IUPAC code."""
    path = tmp_path / "sample.fa"
    path.write_text(">sample chr1\nACGTac\ngtNR\n\n>second\nTTTT\n", encoding="ascii")
    return path


@pytest.fixture
def tmp_config_file(tmp_path: Path) -> Path:
    """Configuration file overriding a few defaults."""
    config_path = tmp_path / "config.json"
    config_path.write_text(
        '{"version": "1.0.0", "debug": false, "index": {"block_size": 64},'
        ' "bench": {"pattern_lengths": [10, 20], "seed": 5}}',
        encoding="utf-8",
    )
    return config_path
