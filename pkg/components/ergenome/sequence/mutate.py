"""Synthetic population generation by mutating a reference.

Every base independently undergoes at most one event: substitution by a
different nucleotide, insertion of a random nucleotide after it, or
deletion. The generator is numpy's PCG64 seeded from the profile, and all
random draws are taken up front so the output is a pure function of
(reference, profile).
"""

from __future__ import annotations

import numpy as np

from ergenome.sequence.models import MutationProfile, Sequence

RNG_NAME = "numpy.random.PCG64"

_NUCLEOTIDES = np.frombuffer(b"ACGT", dtype=np.uint8)
# index of each byte in ACGT, -1 for N
_NUC_INDEX = np.full(256, -1, dtype=np.int64)
_NUC_INDEX[_NUCLEOTIDES] = np.arange(4)


def mutate_reference(ref: Sequence, profile: MutationProfile, individual_id: str | None = None) -> Sequence:
    """Apply random substitutions, insertions and deletions to ``ref``.

    Args:
        ref: Source sequence
        profile: Per-base event probabilities and RNG seed
        individual_id: Identifier of the result (defaults to ``ref.id``)

    Returns:
        The mutated sequence; identical to ``ref`` when all rates are zero
    """
    seq_id = individual_id or ref.id
    if profile.total_rate == 0.0:
        return Sequence(id=seq_id, chromosome=ref.chromosome, data=ref.data)

    rng = np.random.Generator(np.random.PCG64(profile.seed))
    src = np.frombuffer(ref.data.encode("ascii"), dtype=np.uint8)
    n = src.size

    draw = rng.random(n)
    shift = rng.integers(1, 4, size=n)
    inserted = _NUCLEOTIDES[rng.integers(0, 4, size=n)]
    fresh = _NUCLEOTIDES[rng.integers(0, 4, size=n)]

    sub_end = profile.substitution_rate
    ins_end = sub_end + profile.insertion_rate
    del_end = ins_end + profile.deletion_rate
    is_sub = draw < sub_end
    is_ins = (draw >= sub_end) & (draw < ins_end)
    is_del = (draw >= ins_end) & (draw < del_end)

    base = src.copy()
    idx = _NUC_INDEX[src]
    # N has no "different nucleotide" cycle, any nucleotide differs from it
    replacement = np.where(idx >= 0, _NUCLEOTIDES[(idx + shift) % 4], fresh)
    base[is_sub] = replacement[is_sub]

    counts = np.ones(n, dtype=np.int64)
    counts[is_ins] = 2
    counts[is_del] = 0
    out = np.repeat(base, counts)
    ins_slots = np.cumsum(counts)[is_ins] - 1
    out[ins_slots] = inserted[is_ins]

    if out.size == 0:
        # every base deleted: keep one so the sequence stays valid
        out = base[:1]
    return Sequence(id=seq_id, chromosome=ref.chromosome, data=out.tobytes().decode("ascii"))


def generate_population(
    ref: Sequence, count: int, profile: MutationProfile, prefix: str = "individual"
) -> list[Sequence]:
    """Generate ``count`` independently mutated copies of ``ref``.

    Per-individual seeds are spawned from ``profile.seed`` so the population
    is reproducible and members are statistically independent.
    """
    children = np.random.SeedSequence(profile.seed).spawn(count)
    population = []
    for k, child in enumerate(children, start=1):
        seed = int(child.generate_state(1, dtype=np.uint64)[0])
        member_profile = profile.model_copy(update={"seed": seed})
        population.append(mutate_reference(ref, member_profile, individual_id=f"{prefix}_{k}"))
    return population
