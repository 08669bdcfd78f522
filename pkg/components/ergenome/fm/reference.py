"""Reference index bundle: FM-index of R, FM-index of R reversed, R2F/F2R
and the start-row table.

Persisted as an ``ERFM`` file (unencrypted; the reference is public)::

    "ERFM" | version u16 | text_len u64 | sample_rate u32 | occ_step u32
    | reference_id text | text_hash 32 bytes
    | fm section | fm_rev section | r2f array | f2r array | start_rows array

An fm section is ``eof_pos u64 | alphabet blob | bwt blob | checkpoints
array | sample rows array | sample positions array``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ergenome.codec import BinaryReader, BinaryWriter
from ergenome.fm.core import FMIndex, build_fm_index_from_suffix_array
from ergenome.fm.suffix_array import build_suffix_array, inverse_permutation
from ergenome.fm.tables import CorrespondenceTables, tables_from_suffix_arrays
from ergenome.logging import get_logger
from ergenome.validation.exceptions import IndexFormatError

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from ergenome.config import FMConfig

logger = get_logger(__name__)

MAGIC = b"ERFM"
FORMAT_VERSION = 2


def text_hash(text: str) -> str:
    """Hex SHA-256 of a reference text."""
    return hashlib.sha256(text.encode("ascii")).hexdigest()


@dataclass(frozen=True, slots=True)
class ReferenceIndex:
    """Everything the factorizer and the searcher need about one reference.

    ``start_rows[tp]`` is the R_rev row whose backward scan emits R[tp], R[tp+1], ...
    (the row of reverse position n - tp), so a stored factor needs only its ``tp``.
    """

    reference_id: str
    fm: FMIndex
    fm_rev: FMIndex
    tables: CorrespondenceTables
    text_hash: str
    start_rows: NDArray[np.int64]

    def start_row(self, tp: int) -> int:
        return int(self.start_rows[tp])

    @property
    def text_len(self) -> int:
        return self.fm.text_len


def build_reference_index(
    text: str,
    reference_id: str = "reference",
    sample_rate: int = 32,
    occ_step: int = 64,
) -> ReferenceIndex:
    """Build both FM-indexes and the correspondence tables of ``text``.

    One suffix array is computed per direction and reused for the tables.
    """
    sa = build_suffix_array(text)
    reverse_text = text[::-1]
    sa_rev = build_suffix_array(reverse_text)
    index = ReferenceIndex(
        reference_id=reference_id,
        fm=build_fm_index_from_suffix_array(text, sa, sample_rate, occ_step),
        fm_rev=build_fm_index_from_suffix_array(reverse_text, sa_rev, sample_rate, occ_step),
        tables=tables_from_suffix_arrays(sa, sa_rev),
        text_hash=text_hash(text),
        start_rows=inverse_permutation(sa_rev)[::-1].copy(),
    )
    logger.info(
        "Reference index built",
        reference_id=reference_id,
        text_len=len(text),
        sample_rate=sample_rate,
    )
    return index


def build_reference_index_from_config(
    text: str, config: FMConfig, reference_id: str = "reference"
) -> ReferenceIndex:
    return build_reference_index(text, reference_id, config.sample_rate, config.occ_step)


def _write_fm(writer: BinaryWriter, fm: FMIndex) -> None:
    writer.u64(fm.eof_pos)
    writer.blob(fm.alphabet)
    writer.blob(fm.bwt)
    writer.array(fm.checkpoints.ravel(), "<i8")
    writer.array(fm.sample_rows, "<i8")
    writer.array(fm.sample_positions, "<i8")


def _read_fm(reader: BinaryReader, sample_rate: int, occ_step: int) -> FMIndex:
    eof_pos = reader.u64()
    alphabet = reader.blob()
    bwt = reader.blob()
    checkpoints = reader.array("<i8")
    rows = reader.array("<i8")
    positions = reader.array("<i8")
    if not alphabet or checkpoints.size % len(alphabet):
        raise IndexFormatError("Rank checkpoints do not match the alphabet")
    return FMIndex(
        bwt=bwt,
        eof_pos=eof_pos,
        sample_rate=sample_rate,
        sample_rows=rows,
        sample_positions=positions,
        occ_step=occ_step,
        checkpoints=checkpoints.reshape(-1, len(alphabet)),
    )


def dump_reference_index(index: ReferenceIndex) -> bytes:
    writer = BinaryWriter()
    writer.raw(MAGIC)
    writer.u16(FORMAT_VERSION)
    writer.u64(index.fm.text_len)
    writer.u32(index.fm.sample_rate)
    writer.u32(index.fm.occ_step)
    writer.text(index.reference_id)
    writer.raw(bytes.fromhex(index.text_hash))
    _write_fm(writer, index.fm)
    _write_fm(writer, index.fm_rev)
    writer.array(index.tables.r2f, "<i8")
    writer.array(index.tables.f2r, "<i8")
    writer.array(index.start_rows, "<i8")
    return writer.getvalue()


def parse_reference_index(data: bytes) -> ReferenceIndex:
    """Inverse of :func:`dump_reference_index`.

    Raises:
        IndexFormatError: On bad magic, unsupported version or truncation
    """
    reader = BinaryReader(data)
    if reader.raw(4) != MAGIC:
        raise IndexFormatError("Not a reference index file (bad magic)")
    version = reader.u16()
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"Unsupported reference index version {version}")
    text_len = reader.u64()
    sample_rate = reader.u32()
    occ_step = reader.u32()
    reference_id = reader.text()
    digest = reader.raw(32).hex()
    fm = _read_fm(reader, sample_rate, occ_step)
    fm_rev = _read_fm(reader, sample_rate, occ_step)
    r2f = reader.array("<i8").astype(np.int64)
    f2r = reader.array("<i8").astype(np.int64)
    start_rows = reader.array("<i8").astype(np.int64)
    sizes = {r2f.size, f2r.size, start_rows.size}
    if fm.text_len != text_len or fm_rev.text_len != text_len or sizes != {text_len + 1}:
        raise IndexFormatError("Reference index sections disagree on the text length")
    return ReferenceIndex(
        reference_id=reference_id,
        fm=fm,
        fm_rev=fm_rev,
        tables=CorrespondenceTables(r2f=r2f, f2r=f2r),
        text_hash=digest,
        start_rows=start_rows,
    )


def save_reference_index(index: ReferenceIndex, path: Path) -> int:
    """Write ``index`` to ``path``; returns the byte size written."""
    data = dump_reference_index(index)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    logger.info("Reference index saved", path=str(path), size=len(data))
    return len(data)


def load_reference_index(path: Path) -> ReferenceIndex:
    """Read an ``ERFM`` file.

    Raises:
        IndexFormatError: If the file is missing or malformed
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise IndexFormatError(f"Cannot read reference index {path}: {e}") from e
    return parse_reference_index(data)
