"""Performance profiling tests.

cProfile runs over the search and build paths to see where time goes,
and pytest-benchmark cases for regression tracking (skipped unless run
with ``--benchmark-only`` or ``--benchmark-enable``).
"""

from __future__ import annotations

import cProfile
import pstats
import time
from io import StringIO
from typing import TYPE_CHECKING

import pytest

from ergenome.bench import sample_patterns
from ergenome.erindex import build_index, open_index
from ergenome.fm import backward_search, build_reference_index
from ergenome.rlz import factorize

if TYPE_CHECKING:
    from pathlib import Path

    from pytest_benchmark.fixture import BenchmarkFixture

    from ergenome.crypto import KeyPortfolio
    from ergenome.erindex import ERIndex
    from ergenome.fm import ReferenceIndex
    from ergenome.sequence import Sequence as GenomeSequence


def _profile_output(profiler: cProfile.Profile, limit: int) -> str:
    stream = StringIO()
    stats = pstats.Stats(profiler, stream=stream)
    stats.sort_stats("cumulative")
    stats.print_stats(limit)
    return stream.getvalue()


class TestSearchProfile:
    """Profiles of locate over built and opened indexes."""

    def test_locate_profile(self, built_index: ERIndex) -> None:
        """Profile locate over sampled patterns of several lengths."""
        patterns = sample_patterns(built_index, [10, 40, 100], per_length=10, seed=1)

        profiler = cProfile.Profile()
        profiler.enable()
        for sampled in patterns:
            built_index.locate(sampled.pattern)
        profiler.disable()

        output = _profile_output(profiler, 20)
        assert "locate" in output

        print("\n" + "=" * 80)
        print("LOCATE PROFILE (Top 20 by cumulative time)")
        print("=" * 80)
        print(output)

    def test_opened_index_profile(
        self, saved_index_path: Path, portfolio: KeyPortfolio, reference_index: ReferenceIndex
    ) -> None:
        """Profile locate on an opened index, where blocks are decrypted on demand."""
        with open_index(saved_index_path, portfolio, reference_index, cache_bytes=1 << 16) as index:
            patterns = sample_patterns(index, [20, 60], per_length=10, seed=2)

            profiler = cProfile.Profile()
            profiler.enable()
            for sampled in patterns:
                index.locate(sampled.pattern)
            profiler.disable()

        output = _profile_output(profiler, 20)
        assert "locate" in output
        print(output)


@pytest.mark.slow
class TestBuildProfile:
    """Profiles of the build path."""

    def test_build_profile(
        self,
        population: list[GenomeSequence],
        reference_index: ReferenceIndex,
        portfolio: KeyPortfolio,
    ) -> None:
        """Profile factorization, block encryption and tree construction together."""
        profiler = cProfile.Profile()
        profiler.enable()
        build_index(population, reference_index, portfolio, block_size=32, tree_order=8)
        profiler.disable()

        output = _profile_output(profiler, 25)
        assert "factorize" in output
        print(output)


class TestScalabilityProfile:
    """How locate time grows with pattern length."""

    def test_pattern_length_scaling(self, built_index: ERIndex) -> None:
        """Report mean locate time per pattern length."""
        results = []
        for length in (8, 32, 128):
            patterns = sample_patterns(built_index, [length], per_length=8, seed=length)
            started = time.perf_counter()
            for sampled in patterns:
                assert built_index.locate(sampled.pattern)
            elapsed = time.perf_counter() - started
            results.append((length, elapsed / len(patterns)))

        print("\n" + "=" * 80)
        print("PATTERN LENGTH SCALING")
        print("=" * 80)
        for length, mean_s in results:
            print(f"Length: {length:4d} | Mean: {mean_s * 1000:.3f} ms")

        assert all(mean_s > 0 for _, mean_s in results)


class TestPerformanceRegression:
    """Benchmarks for regression detection."""

    @pytest.mark.benchmark(group="search")
    def test_benchmark_locate(self, built_index: ERIndex, benchmark: BenchmarkFixture) -> None:
        """Benchmark locate of a 50-symbol pattern."""
        pattern = built_index.extract("ind_3", 700, 50)

        result = benchmark(built_index.locate, pattern)

        assert result

    @pytest.mark.benchmark(group="search")
    def test_benchmark_extract(self, built_index: ERIndex, benchmark: BenchmarkFixture) -> None:
        """Benchmark extraction of 500 symbols."""
        result = benchmark(built_index.extract, "ind_2", 100, 500)

        assert len(result) == 500

    @pytest.mark.benchmark(group="fm")
    def test_benchmark_backward_search(
        self, reference_index: ReferenceIndex, reference_text: str, benchmark: BenchmarkFixture
    ) -> None:
        """Benchmark a backward search of 100 reference symbols."""
        result = benchmark(backward_search, reference_index.fm, reference_text[300:400])

        assert result is not None

    @pytest.mark.benchmark(group="build")
    def test_benchmark_factorize(
        self,
        population: list[GenomeSequence],
        reference_index: ReferenceIndex,
        benchmark: BenchmarkFixture,
    ) -> None:
        """Benchmark factorizing one individual."""
        ref = reference_index

        result = benchmark(factorize, population[0], ref.fm_rev, ref.fm, ref.tables)

        assert result.factors

    @pytest.mark.benchmark(group="build")
    def test_benchmark_reference_build(self, reference_text: str, benchmark: BenchmarkFixture) -> None:
        """Benchmark building both FM-indexes of the reference."""
        result = benchmark(build_reference_index, reference_text, "chrT")

        assert result.text_len == len(reference_text)
