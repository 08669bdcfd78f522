"""Validation component public interface.

Provides the exception hierarchy and input validators.
"""

from ergenome.validation.core import (
    GENOMIC_ALPHABET,
    validate_identifier,
    validate_pattern,
    validate_range,
)
from ergenome.validation.exceptions import (
    AuthorizationError,
    BenchmarkError,
    CatalogError,
    ConfigurationError,
    ContractViolationError,
    CorruptionError,
    CryptoError,
    ErGenomeError,
    FactorizationError,
    IndexFormatError,
    NonceReuseError,
    NonceSpaceError,
    SequenceFormatError,
    StartOfTextError,
    UnsupportedOperationError,
    ValidationError,
)

__all__ = [
    "GENOMIC_ALPHABET",
    # Exceptions
    "AuthorizationError",
    "BenchmarkError",
    "CatalogError",
    "ConfigurationError",
    "ContractViolationError",
    "CorruptionError",
    "CryptoError",
    "ErGenomeError",
    "FactorizationError",
    "IndexFormatError",
    "NonceReuseError",
    "NonceSpaceError",
    "SequenceFormatError",
    "StartOfTextError",
    "UnsupportedOperationError",
    "ValidationError",
    # Validation functions
    "validate_identifier",
    "validate_pattern",
    "validate_range",
]
