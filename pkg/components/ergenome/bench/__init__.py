"""Benchmark component: pattern sampling, search and build timing, CSV/JSON reports."""

from ergenome.bench.core import (
    AGGREGATE_FIELDS,
    CONCURRENT_AGGREGATE_FIELDS,
    CONCURRENT_RAW_FIELDS,
    RAW_FIELDS,
    aggregate,
    format_table,
    read_raw_csv,
    run_benchmark,
    run_patterns,
    sample_patterns,
    time_builds,
    time_concurrent,
    time_locate,
    write_aggregate_csv,
    write_raw_csv,
    write_summary_json,
)
from ergenome.bench.models import BenchReport, LengthStats, PatternTiming, SampledPattern

__all__ = [
    "AGGREGATE_FIELDS",
    "CONCURRENT_AGGREGATE_FIELDS",
    "CONCURRENT_RAW_FIELDS",
    "RAW_FIELDS",
    "BenchReport",
    "LengthStats",
    "PatternTiming",
    "SampledPattern",
    "aggregate",
    "format_table",
    "read_raw_csv",
    "run_benchmark",
    "run_patterns",
    "sample_patterns",
    "time_builds",
    "time_concurrent",
    "time_locate",
    "write_aggregate_csv",
    "write_raw_csv",
    "write_summary_json",
]
