"""Configuration models using Pydantic validation.

This module defines Pydantic models for configuration data,
providing automatic validation and type checking.

- BaseConfig with shared settings (extra='forbid', frozen=True)
- Annotated pattern for reusable field constraints
"""

from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field

from ergenome.models import LogLevel


class BaseConfig(BaseModel):
    """Base configuration model with shared Pydantic v2 settings.

    Provides common configuration for all config models:
    - extra='forbid': Reject unknown fields to catch typos early
    - frozen=True: Immutable config objects for safety
    - strict=True: Strict type checking, no coercion
    - validate_default=True: Validate default values
    - str_strip_whitespace=True: Auto-trim string inputs
    """

    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        strict=True,
        validate_default=True,
        str_strip_whitespace=True,
    )


# Reusable annotated types
PositiveInt = Annotated[int, Field(ge=1)]
TreeOrder = Annotated[int, Field(ge=2, le=4096)]
WorkerCount = Annotated[int, Field(ge=1, le=256)]
CacheBytes = Annotated[int, Field(ge=0)]
SemverVersion = Annotated[str, Field(pattern=r"^\d+\.\d+\.\d+$")]


class FMConfig(BaseConfig):
    """FM-index build parameters."""

    sample_rate: PositiveInt = 32
    occ_step: PositiveInt = 64


class TreeConfig(BaseConfig):
    """EB+ tree parameters."""

    order: TreeOrder = 256


class IndexConfig(BaseConfig):
    """ER-index build and query parameters.

    Attributes:
        block_size: Factors per encrypted block
        cache_bytes: Upper bound for decrypted blocks and nodes kept per open index
        parallel_splits: Evaluate pattern split points on a thread pool
        workers: Worker count for factorization and split-point evaluation
    """

    block_size: PositiveInt = 128
    cache_bytes: CacheBytes = 256 * 1024 * 1024
    parallel_splits: bool = False
    workers: WorkerCount = 1


class BenchConfig(BaseConfig):
    """Benchmark harness defaults."""

    # JSON arrays arrive as lists
    pattern_lengths: Annotated[tuple[PositiveInt, ...], Field(strict=False)] = (20, 50, 100, 200, 500)
    patterns_per_length: PositiveInt = 500
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 42
    repeat: PositiveInt = 3
    concurrent: bool = False


class ApplicationConfig(BaseConfig):
    """Application configuration with Pydantic validation."""

    version: SemverVersion = "1.0.0"
    debug: bool = False
    log_level: Annotated[LogLevel, Field(strict=False)] = LogLevel.INFO
    fm: FMConfig = Field(default_factory=FMConfig)
    tree: TreeConfig = Field(default_factory=TreeConfig)
    index: IndexConfig = Field(default_factory=IndexConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)
