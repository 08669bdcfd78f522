"""Shared enums and value models for ergenome.

Models here carry no behaviour beyond validation so that every brick can
import them without pulling in another brick.
"""

from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field


class LogLevel(StrEnum):
    """Logging levels.

    Using StrEnum (Python 3.11+) provides automatic string conversion
    and better type safety compared to regular Enum.
    """

    DEBUG = "debug"
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


class TreeKind(StrEnum):
    """The three search trees of an ER-index and the factor key each one holds."""

    REVERSE = "reverse"
    FORWARD = "forward"
    POSITION = "position"

    @property
    def base_nonce(self) -> int:
        """Nonce of the tree directory; node ``k`` uses ``base_nonce + k + 1``."""
        return _BASE_NONCES[self]


_BASE_NONCES = {
    TreeKind.REVERSE: 10_000_000,
    TreeKind.FORWARD: 20_000_000,
    TreeKind.POSITION: 30_000_000,
}


class Occurrence(BaseModel):
    """One pattern occurrence inside an individual sequence.

    Factor coordinates locate the first and last pattern symbol; the text
    position is the absolute offset in the individual's sequence.

    Attributes:
        individual_id: Identifier of the individual the occurrence belongs to
        fact_ind: Index of the factor holding the first pattern symbol
        fact_off: Offset of the first pattern symbol within that factor
        ending_fact_ind: Index of the factor holding the last pattern symbol
        ending_fact_off: Offset of the last pattern symbol within that factor
        text_position: Absolute start position, -1 until resolved
    """

    model_config = ConfigDict(frozen=True, strict=True)

    individual_id: str = Field(min_length=1)
    fact_ind: int = Field(ge=0)
    fact_off: int = Field(ge=0)
    ending_fact_ind: int = Field(ge=0)
    ending_fact_off: int = Field(ge=0)
    text_position: int = Field(default=-1, ge=-1)
