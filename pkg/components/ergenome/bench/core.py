"""Search benchmark harness.

Patterns are cut uniformly at random from the indexed sequences (numpy
PCG64 seeded from the configuration), so each occurs at least once. Each
pattern is searched ``repeat`` times and the median time is kept. Timing
covers the search only. The index is opened beforehand, header only, and
its cache is emptied before every repeat, so each timed query pays for the
decryption it triggers.

With ``concurrent`` set, the patterns are also searched on a thread pool
in ``repeat`` rounds; the cache is emptied before each round and shared by
the searches within it. Those timings go to separate ``concurrent_*``
columns.

The build time is the mean of ``repeat`` in-memory builds and encodings of
the indexed collection when the portfolio holds every individual key;
otherwise it is the time of the one build recorded in the catalog.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING

import numpy as np
import orjson

from ergenome.bench.models import BenchReport, LengthStats, PatternTiming, SampledPattern
from ergenome.erindex import build_index, dump_index, index_stats
from ergenome.logging import get_logger
from ergenome.sequence import RNG_NAME
from ergenome.validation.exceptions import BenchmarkError, ValidationError

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from ergenome.config import BenchConfig
    from ergenome.crypto import KeyPortfolio
    from ergenome.erdb import ERDatabase
    from ergenome.erindex import ERIndex
    from ergenome.fm import ReferenceIndex
    from ergenome.sequence import Sequence as GenomeSequence

logger = get_logger(__name__)

CONCURRENT_RAW_FIELDS = ("concurrent_time_ms", "concurrent_per_occ_ms")
CONCURRENT_AGGREGATE_FIELDS = (
    "concurrent_mean_ms",
    "concurrent_median_ms",
    "concurrent_mean_per_occ_ms",
    "concurrent_median_per_occ_ms",
)
RAW_FIELDS = tuple(f for f in PatternTiming.model_fields if f not in CONCURRENT_RAW_FIELDS)
AGGREGATE_FIELDS = tuple(
    f for f in LengthStats.model_fields if f not in CONCURRENT_AGGREGATE_FIELDS
)


def sample_patterns(
    index: ERIndex, lengths: Sequence[int], per_length: int, seed: int
) -> list[SampledPattern]:
    """Cut ``per_length`` patterns of each length from the authorized sequences.

    An individual is drawn uniformly among those long enough, then a start
    position uniformly. The same seed yields the same patterns.

    Raises:
        ValidationError: If no authorized sequence is long enough for a length
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    sizes = {i: index.sequence_length(i) for i in index.authorized_ids}
    patterns = []
    for length in lengths:
        eligible = [i for i, size in sizes.items() if size >= length]
        if not eligible:
            raise ValidationError(f"No authorized sequence is {length} symbols long")
        for _ in range(per_length):
            individual_id = eligible[int(rng.integers(len(eligible)))]
            start = int(rng.integers(sizes[individual_id] - length + 1))
            patterns.append(
                SampledPattern(
                    pattern_length=length,
                    individual_id=individual_id,
                    start=start,
                    pattern=index.extract(individual_id, start, length),
                )
            )
    return patterns


def _timed_locate(index: ERIndex, pattern: str) -> tuple[float, int]:
    started = time.perf_counter()
    count = len(index.locate(pattern))
    return (time.perf_counter() - started) * 1000.0, count


def time_locate(index: ERIndex, pattern: str, repeat: int) -> tuple[float, int]:
    """Median milliseconds of ``repeat`` searches, each on an empty cache, and the occurrence count."""
    times = []
    count = 0
    for _ in range(repeat):
        index.clear_cache()
        time_ms, count = _timed_locate(index, pattern)
        times.append(time_ms)
    return float(np.median(times)), count


def time_concurrent(
    index: ERIndex, patterns: Sequence[str], repeat: int, workers: int = 4
) -> list[tuple[float, int]]:
    """Median milliseconds and occurrence count of each pattern searched on a thread pool.

    Raises:
        BenchmarkError: If a round's counts differ from the previous round's
    """
    if not patterns:
        return []
    rounds: list[list[tuple[float, int]]] = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for _ in range(repeat):
            index.clear_cache()
            rounds.append(list(pool.map(lambda p: _timed_locate(index, p), patterns)))
    counts = [count for _, count in rounds[0]]
    if any([count for _, count in r] != counts for r in rounds[1:]):
        raise BenchmarkError("Concurrent rounds disagree on occurrence counts")
    medians = np.median(np.array([[t for t, _ in r] for r in rounds]), axis=0)
    return list(zip(medians.tolist(), counts, strict=True))


def run_patterns(
    index: ERIndex,
    patterns: Sequence[SampledPattern],
    repeat: int = 3,
    *,
    concurrent: bool = False,
    workers: int = 4,
) -> list[PatternTiming]:
    """Search every pattern and return one timing row per pattern.

    Sequential timings are always taken; ``concurrent`` adds the thread-pool
    timings to the same rows.

    Raises:
        BenchmarkError: If a sampled pattern is not found, or concurrent
            counts differ from sequential ones
    """
    rows = []
    for k, sampled in enumerate(patterns):
        time_ms, count = time_locate(index, sampled.pattern, repeat)
        if count == 0:
            raise BenchmarkError(
                f"Pattern cut from {sampled.individual_id} at {sampled.start} was not found"
            )
        rows.append(
            PatternTiming(
                pattern_length=sampled.pattern_length,
                pattern_index=k,
                individual_id=sampled.individual_id,
                start=sampled.start,
                occurrences=count,
                time_ms=time_ms,
                per_occ_ms=time_ms / count,
            )
        )
    if not concurrent:
        return rows

    timings = time_concurrent(index, [p.pattern for p in patterns], repeat, workers)
    if [count for _, count in timings] != [row.occurrences for row in rows]:
        raise BenchmarkError("Concurrent searches disagree with sequential ones")
    return [
        row.model_copy(
            update={"concurrent_time_ms": time_ms, "concurrent_per_occ_ms": time_ms / count}
        )
        for row, (time_ms, count) in zip(rows, timings, strict=True)
    ]


def time_builds(
    collection: Sequence[GenomeSequence],
    reference: ReferenceIndex,
    portfolio: KeyPortfolio,
    *,
    block_size: int,
    tree_order: int,
    repeat: int,
    workers: int = 1,
) -> float:
    """Mean seconds to build and encode an index of ``collection``, over ``repeat`` builds."""
    times = []
    for _ in range(repeat):
        started = time.perf_counter()
        index = build_index(collection, reference, portfolio, block_size, tree_order, workers)
        dump_index(index, portfolio)
        times.append(time.perf_counter() - started)
    return float(np.mean(times))


def aggregate(rows: Sequence[PatternTiming]) -> list[LengthStats]:
    """Per-length statistics; all of them recompute from the raw rows."""
    stats = []
    for length in sorted({row.pattern_length for row in rows}):
        group = [row for row in rows if row.pattern_length == length]
        times = np.array([row.time_ms for row in group])
        per_occ = np.array([row.per_occ_ms for row in group])
        counts = [row.occurrences for row in group]
        c_times = np.array([row.concurrent_time_ms for row in group], dtype=np.float64)
        c_per_occ = np.array([row.concurrent_per_occ_ms for row in group], dtype=np.float64)
        concurrent = not np.isnan(c_times).any()
        stats.append(
            LengthStats(
                pattern_length=length,
                patterns=len(group),
                mean_ms=float(times.mean()),
                median_ms=float(np.median(times)),
                mean_per_occ_ms=float(per_occ.mean()),
                median_per_occ_ms=float(np.median(per_occ)),
                total_occurrences=sum(counts),
                min_occurrences=min(counts),
                max_occurrences=max(counts),
                concurrent_mean_ms=float(c_times.mean()) if concurrent else None,
                concurrent_median_ms=float(np.median(c_times)) if concurrent else None,
                concurrent_mean_per_occ_ms=float(c_per_occ.mean()) if concurrent else None,
                concurrent_median_per_occ_ms=float(np.median(c_per_occ)) if concurrent else None,
            )
        )
    return stats


# ----------------------------------------------------------------------
# Output
# ----------------------------------------------------------------------


def _write_csv(
    path: Path, fields: tuple[str, ...], rows: Sequence[PatternTiming] | Sequence[LengthStats]
) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(row.model_dump(include=set(fields)) for row in rows)


def write_raw_csv(rows: Sequence[PatternTiming], path: Path) -> None:
    """Write one row per pattern; the concurrent columns only when every row has them."""
    fields = RAW_FIELDS
    if rows and all(row.concurrent_time_ms is not None for row in rows):
        fields += CONCURRENT_RAW_FIELDS
    _write_csv(path, fields, rows)


def write_aggregate_csv(stats: Sequence[LengthStats], path: Path) -> None:
    fields = AGGREGATE_FIELDS
    if stats and all(row.concurrent_mean_ms is not None for row in stats):
        fields += CONCURRENT_AGGREGATE_FIELDS
    _write_csv(path, fields, stats)


def read_raw_csv(path: Path) -> list[PatternTiming]:
    with path.open(newline="", encoding="utf-8") as fh:
        return [
            PatternTiming.model_validate({k: v for k, v in row.items() if v != ""})
            for row in csv.DictReader(fh)
        ]


def write_summary_json(report: BenchReport, path: Path) -> None:
    path.write_bytes(orjson.dumps(report.model_dump(mode="json"), option=orjson.OPT_INDENT_2))


def format_table(report: BenchReport) -> str:
    """Human-readable summary of ``report``."""
    concurrent = bool(report.stats) and report.stats[0].concurrent_mean_ms is not None
    lines = [
        f"collection {report.collection_id}: {report.individuals} individuals, "
        f"build {report.build_time_s:.2f} s (mean of {report.build_runs})",
        f"input {report.input_bytes} B, index {report.index_bytes} B, "
        f"ratio {report.compression_ratio:.4f}",
        "",
        f"{'length':>8} {'patterns':>9} {'mean ms':>10} {'median ms':>10} "
        f"{'mean/occ':>10} {'median/occ':>11} {'occs':>8}"
        + (f" {'conc mean':>10} {'conc median':>11}" if concurrent else ""),
    ]
    for s in report.stats:
        line = (
            f"{s.pattern_length:>8} {s.patterns:>9} {s.mean_ms:>10.3f} {s.median_ms:>10.3f} "
            f"{s.mean_per_occ_ms:>10.4f} {s.median_per_occ_ms:>11.4f} {s.total_occurrences:>8}"
        )
        if concurrent:
            line += f" {s.concurrent_mean_ms:>10.3f} {s.concurrent_median_ms:>11.3f}"
        lines.append(line)
    return "\n".join(lines)


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------


def run_benchmark(
    db: ERDatabase,
    chromosome: str,
    portfolio: KeyPortfolio,
    config: BenchConfig,
    out_dir: Path | None = None,
    *,
    build_workers: int = 1,
) -> BenchReport:
    """Benchmark the ER-index of ``chromosome`` and write CSV and JSON results.

    Files written to ``out_dir`` when given: ``<chromosome>_raw.csv``,
    ``<chromosome>_aggregate.csv`` and ``<chromosome>_summary.json``.
    """
    record = db.catalog.index_for(chromosome)
    collection = db.load_collection(chromosome, record.individuals)
    input_bytes = sum(len(member.data) for member in collection)
    sections = index_stats(db.resolve(record.path), portfolio.system_key)

    with db.open_population_index(chromosome, portfolio) as index:
        patterns = sample_patterns(
            index, config.pattern_lengths, config.patterns_per_length, config.seed
        )
        logger.info("Patterns sampled", chromosome=chromosome, patterns=len(patterns))
        rows = run_patterns(index, patterns, config.repeat, concurrent=config.concurrent)
        build_time_s, build_runs = record.build_time_s, 1
        if all(i in portfolio.individual_keys for i in record.individuals):
            build_time_s = time_builds(
                collection,
                index.reference,
                portfolio,
                block_size=index.block_size,
                tree_order=index.tree_order,
                repeat=config.repeat,
                workers=build_workers,
            )
            build_runs = config.repeat
        else:
            logger.info("Build not repeated: portfolio lacks individual keys", user=portfolio.user_id)

    report = BenchReport(
        collection_id=chromosome,
        individuals=len(record.individuals),
        build_time_s=build_time_s,
        build_runs=build_runs,
        input_bytes=input_bytes,
        index_bytes=sections.total_bytes,
        compression_ratio=sections.total_bytes / input_bytes,
        sections=sections,
        rng=RNG_NAME,
        seed=config.seed,
        repeat=config.repeat,
        concurrent=config.concurrent,
        stats=aggregate(rows),
        raw=rows,
    )
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_raw_csv(rows, out_dir / f"{chromosome}_raw.csv")
        write_aggregate_csv(report.stats, out_dir / f"{chromosome}_aggregate.csv")
        write_summary_json(report, out_dir / f"{chromosome}_summary.json")
    logger.info(
        "Benchmark finished",
        chromosome=chromosome,
        ratio=round(report.compression_ratio, 6),
        patterns=len(rows),
        build_runs=build_runs,
    )
    return report
