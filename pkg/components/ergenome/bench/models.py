"""Benchmark report models."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ergenome.erindex import IndexStats  # noqa: TC001


class SampledPattern(BaseModel):
    """A pattern cut from an indexed sequence, so it occurs at least once."""

    model_config = ConfigDict(frozen=True)

    pattern_length: int = Field(ge=1)
    individual_id: str
    start: int = Field(ge=0)
    pattern: str


class PatternTiming(BaseModel):
    """One raw CSV row: the median search time of one pattern over the repeats.

    The ``concurrent_*`` figures are set only when queries also ran on a
    thread pool.
    """

    model_config = ConfigDict(frozen=True)

    pattern_length: int
    pattern_index: int
    individual_id: str
    start: int
    occurrences: int = Field(ge=1)
    time_ms: float
    per_occ_ms: float
    concurrent_time_ms: float | None = None
    concurrent_per_occ_ms: float | None = None


class LengthStats(BaseModel):
    """One aggregate CSV row: statistics over the patterns of one length."""

    model_config = ConfigDict(frozen=True)

    pattern_length: int
    patterns: int
    mean_ms: float
    median_ms: float
    mean_per_occ_ms: float
    median_per_occ_ms: float
    total_occurrences: int
    min_occurrences: int
    max_occurrences: int
    concurrent_mean_ms: float | None = None
    concurrent_median_ms: float | None = None
    concurrent_mean_per_occ_ms: float | None = None
    concurrent_median_per_occ_ms: float | None = None


class BenchReport(BaseModel):
    """Size and search-time figures for one indexed collection.

    ``compression_ratio`` is ``index_bytes / input_bytes``; the section sizes
    in ``sections`` sum to ``index_bytes``. ``build_time_s`` is the mean of
    ``build_runs`` builds.
    """

    model_config = ConfigDict(frozen=True)

    collection_id: str
    individuals: int
    build_time_s: float
    build_runs: int = Field(default=1, ge=1)
    input_bytes: int
    index_bytes: int
    compression_ratio: float
    sections: IndexStats
    rng: str
    seed: int
    repeat: int
    concurrent: bool
    stats: list[LengthStats]
    raw: list[PatternTiming] = Field(default_factory=list, exclude=True)
