"""Custom exception classes for ergenome.

This module defines a hierarchy of custom exceptions following Python best practices.
All exceptions inherit from a base exception for easy catching.

Use Python's standard exception chaining with 'raise ... from ...' syntax instead of
custom __init__ and __str__ methods. This provides better traceback and debugging.
"""


class ErGenomeError(Exception):
    """Base exception for all ergenome errors.

    Example:
        try:
            index = open_index(path, portfolio)
        except OSError as e:
            raise ErGenomeError("Index unavailable") from e
    """


class ConfigurationError(ErGenomeError):
    """Raised when configuration is invalid, missing, or cannot be loaded.

    Examples:
        - Invalid JSON format
        - Unknown configuration fields
        - Configuration values out of valid range
    """


class ValidationError(ErGenomeError):
    """Raised when user input fails validation.

    Examples:
        - Pattern containing symbols outside {A,C,G,T,N}
        - Empty or malformed identifiers
        - Mutation rates out of range
        - Extraction range outside the sequence
    """


class SequenceFormatError(ValidationError):
    """Raised when a FASTA file cannot be read as a sequence.

    Examples:
        - Missing file
        - First line is not a '>' header
        - Header without any sequence body
    """


class ContractViolationError(ErGenomeError):
    """Raised when an FM-index primitive receives an out-of-range argument."""


class StartOfTextError(ContractViolationError):
    """Raised when a backward step is attempted from the first text position."""


class IndexFormatError(ErGenomeError):
    """Raised when a persisted index cannot be parsed.

    Examples:
        - Wrong magic bytes or unsupported format version
        - Checksum mismatch
        - Truncated section
    """


class CorruptionError(IndexFormatError):
    """Raised when decoded data contradicts its own structure.

    Examples:
        - Factor decoding runs off the start of the reference
        - Factor index beyond the factorization
    """


class AuthorizationError(ErGenomeError):
    """Raised when a key portfolio cannot be opened or lacks a required key."""


class CryptoError(ErGenomeError):
    """Raised on cipher misuse (wrong key length, keystream budget exceeded)."""


class NonceReuseError(CryptoError):
    """Raised when one (key, nonce) pair is used for two segments of one save."""


class NonceSpaceError(CryptoError):
    """Raised when a tree or factorization is too large for its nonce range."""


class CatalogError(ErGenomeError):
    """Raised on inconsistent database catalog operations.

    Examples:
        - Duplicate individual, user or reference id
        - Grant to a user without a public key
        - Build with an unregistered individual
        - Reference FASTA changed since its index was built
    """


class UnsupportedOperationError(ErGenomeError):
    """Raised for operations the database deliberately does not offer (ungrant)."""


class FactorizationError(ErGenomeError):
    """Raised when factorizing one individual of a collection fails.

    The failing individual travels with the error so parallel builds can
    report which input was at fault.
    """

    def __init__(self, message: str, individual_id: str) -> None:
        super().__init__(message)
        self.individual_id = individual_id


class BenchmarkError(ErGenomeError):
    """Raised when a benchmark run contradicts its own guarantees.

    Examples:
        - A pattern cut from the data is not found
        - Concurrent and sequential searches disagree
    """
