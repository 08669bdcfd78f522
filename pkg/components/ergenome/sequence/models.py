"""Sequence and mutation-profile models."""

from __future__ import annotations

from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ergenome.validation.core import GENOMIC_ALPHABET

Rate = Annotated[float, Field(ge=0.0, le=1.0)]


class Sequence(BaseModel):
    """A genomic sequence of one individual for one chromosome.

    Attributes:
        id: Individual identifier
        chromosome: Reference role tag (e.g. ``chr20``)
        data: Upper-case symbols over {A,C,G,T,N}
    """

    model_config = ConfigDict(frozen=True, str_strip_whitespace=True)

    id: str = Field(min_length=1)
    chromosome: str = ""
    data: str = Field(min_length=1)

    @field_validator("data")
    @classmethod
    def normalize_symbols(cls, v: str) -> str:
        """Upper-case the symbols and reject anything outside the alphabet."""
        upper = v.upper()
        invalid = set(upper) - GENOMIC_ALPHABET
        if invalid:
            raise ValueError(f"symbols outside {{A,C,G,T,N}}: {''.join(sorted(invalid))}")
        return upper

    @property
    def length(self) -> int:
        return len(self.data)


class MutationProfile(BaseModel):
    """Per-base edit probabilities for synthetic population generation."""

    model_config = ConfigDict(frozen=True)

    substitution_rate: Rate = 0.0
    insertion_rate: Rate = 0.0
    deletion_rate: Rate = 0.0
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 0

    @model_validator(mode="after")
    def check_total_rate(self) -> MutationProfile:
        total = self.substitution_rate + self.insertion_rate + self.deletion_rate
        if total > 1.0:
            raise ValueError(f"summed edit rates {total} exceed 1")
        return self

    @property
    def total_rate(self) -> float:
        return self.substitution_rate + self.insertion_rate + self.deletion_rate
