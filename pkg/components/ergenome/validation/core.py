"""Input validators shared by the CLI and the library entry points.

Validators follow the Fail Fast principle: they normalise what can be
normalised and raise ``ValidationError`` for everything else.
"""

from __future__ import annotations

import re

from ergenome.validation.exceptions import ValidationError

GENOMIC_ALPHABET = frozenset("ACGTN")

_IDENTIFIER = re.compile(r"^[A-Za-z0-9_.-]+$")


def validate_pattern(pattern: str) -> str:
    """Normalise a search pattern to upper case and check its alphabet.

    Args:
        pattern: Raw pattern text

    Returns:
        Upper-cased pattern

    Raises:
        ValidationError: If the pattern is empty or holds a symbol outside {A,C,G,T,N}

    Examples:
        >>> validate_pattern("acgt")
        'ACGT'
    """
    normalized = pattern.strip().upper()
    if not normalized:
        raise ValidationError("Pattern must not be empty")

    invalid = set(normalized) - GENOMIC_ALPHABET
    if invalid:
        raise ValidationError(
            f"Pattern holds symbols outside {{A,C,G,T,N}}: {''.join(sorted(invalid))}"
        )
    return normalized


def validate_identifier(identifier: str, kind: str = "identifier") -> str:
    """Check an individual, user or chromosome identifier.

    Args:
        identifier: Candidate identifier
        kind: Noun used in the error message

    Returns:
        The identifier unchanged

    Raises:
        ValidationError: If the identifier is empty or has characters outside [A-Za-z0-9_.-]
    """
    if not _IDENTIFIER.match(identifier):
        raise ValidationError(f"Invalid {kind} {identifier!r}: use letters, digits, '_', '.', '-'")
    return identifier


def validate_range(start: int, length: int, total: int) -> None:
    """Check that ``[start, start + length)`` lies inside ``[0, total)``.

    Raises:
        ValidationError: If the range is negative or exceeds ``total``
    """
    if start < 0 or length < 0 or start + length > total:
        raise ValidationError(
            f"Range [{start}, {start + length}) outside sequence of length {total}"
        )
