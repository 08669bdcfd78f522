"""Configuration management component.

This component handles configuration loading, validation, and management.
"""

from ergenome.config.loader import DEFAULT_CONFIG_PATH, load_config, validate_config_file
from ergenome.config.models import (
    ApplicationConfig,
    BenchConfig,
    FMConfig,
    IndexConfig,
    TreeConfig,
)
from ergenome.validation.exceptions import ConfigurationError

__all__ = [
    "DEFAULT_CONFIG_PATH",
    "ApplicationConfig",
    "BenchConfig",
    "ConfigurationError",
    "FMConfig",
    "IndexConfig",
    "TreeConfig",
    "load_config",
    "validate_config_file",
]
