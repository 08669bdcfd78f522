"""Sequence component: sequence model, FASTA I/O and synthetic populations."""

from ergenome.sequence.fasta import (
    FastaRecord,
    iter_fasta_records,
    load_fasta,
    read_fasta,
    write_fasta,
)
from ergenome.sequence.models import MutationProfile, Sequence
from ergenome.sequence.mutate import RNG_NAME, generate_population, mutate_reference

__all__ = [
    "RNG_NAME",
    "FastaRecord",
    "MutationProfile",
    "Sequence",
    "generate_population",
    "iter_fasta_records",
    "load_fasta",
    "mutate_reference",
    "read_fasta",
    "write_fasta",
]
