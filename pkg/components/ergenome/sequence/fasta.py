"""FASTA reading and writing.

Header lines start with '>'; sequence lines may be wrapped arbitrarily.
Symbols outside {A,C,G,T,N} (IUPAC ambiguity codes and anything else)
are mapped to N and tallied.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

from pydantic import ValidationError as PydanticValidationError

from ergenome.logging import get_logger
from ergenome.sequence.models import Sequence
from ergenome.validation.exceptions import SequenceFormatError

if TYPE_CHECKING:
    from collections.abc import Iterator

logger = get_logger(__name__)

_NON_GENOMIC = re.compile(r"[^ACGTN]")


@dataclass(frozen=True, slots=True)
class FastaRecord:
    """One FASTA record after normalisation."""

    header: str
    data: str
    replaced: int


def _normalize(lines: list[str]) -> tuple[str, int]:
    body = "".join(lines).upper()
    return _NON_GENOMIC.subn("N", body)


def iter_fasta_records(path: str | Path) -> Iterator[FastaRecord]:
    """Yield the records of a FASTA file in file order.

    Raises:
        SequenceFormatError: If the file is missing, does not start with a
            header, or a record has an empty body
    """
    path = Path(path)
    try:
        handle = path.open(encoding="ascii", errors="replace")
    except OSError as exc:
        raise SequenceFormatError(f"Cannot read FASTA file {path}: {exc}") from exc

    with handle:
        header: str | None = None
        lines: list[str] = []
        for raw_line in handle:
            line = raw_line.strip()
            if not line:
                continue
            if line.startswith(">"):
                if header is not None:
                    yield _make_record(path, header, lines)
                header, lines = line[1:].strip(), []
            elif header is None:
                raise SequenceFormatError(f"{path}: sequence data before the first '>' header")
            else:
                lines.append(line)

        if header is None:
            raise SequenceFormatError(f"{path}: no '>' header found")
        yield _make_record(path, header, lines)


def _make_record(path: Path, header: str, lines: list[str]) -> FastaRecord:
    data, replaced = _normalize(lines)
    if not data:
        raise SequenceFormatError(f"{path}: record {header!r} has an empty sequence body")
    return FastaRecord(header=header, data=data, replaced=replaced)


def read_fasta(path: str | Path) -> FastaRecord:
    """Read a FASTA file, concatenating multiple records in file order.

    Returns:
        A single record whose header is the first record's header and whose
        ``replaced`` count sums all records
    """
    records = list(iter_fasta_records(path))
    return FastaRecord(
        header=records[0].header,
        data="".join(r.data for r in records),
        replaced=sum(r.replaced for r in records),
    )


def load_fasta(
    path: str | Path, individual_id: str | None = None, chromosome: str = ""
) -> Sequence:
    """Load a FASTA file as a :class:`Sequence`.

    Args:
        path: FASTA file
        individual_id: Identifier to assign; defaults to the first header word
        chromosome: Reference role tag

    Raises:
        SequenceFormatError: On a missing file, a missing header or an empty body

    Examples:
        >>> seq = load_fasta("ind1.fa", individual_id="ind1")  # doctest: +SKIP
    """
    record = read_fasta(path)
    if record.replaced:
        logger.warning(
            "Symbols outside ACGTN mapped to N", path=str(path), replaced=record.replaced
        )
    seq_id = individual_id or (record.header.split()[0] if record.header else Path(path).stem)
    try:
        return Sequence(id=seq_id, chromosome=chromosome, data=record.data)
    except PydanticValidationError as exc:
        raise SequenceFormatError(f"{path}: {exc}") from exc


def write_fasta(sequence: Sequence, path: str | Path, width: int = 60) -> None:
    """Write ``sequence`` as a single FASTA record wrapped at ``width`` columns."""
    data = sequence.data
    lines = [f">{sequence.id} {sequence.chromosome}".rstrip()]
    lines.extend(data[i : i + width] for i in range(0, len(data), width))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
