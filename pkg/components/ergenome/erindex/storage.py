"""ER-index files: save, header-only open and section statistics.

File layout::

    "ERIX" | version u16 | header length u32 | header ciphertext
    | factorization section per individual | reverse, forward, position tree sections
    | sha256(header ciphertext) | sha256(the three tree directories)

The header (system key, nonce 0) lists the reference id and text hash,
every individual with the offset and length of its factorization section,
block size, l_max, tree order and the offset and length of each tree
section, followed by its own SHA-256. A factorization section is the
header ciphertext (individual key, nonce 0, varint length prefix) followed by
the block ciphertexts (individual key, nonce block + 1).

Opening maps the file and decrypts only the index header and the three
tree directories; blocks and nodes are decrypted when a query touches them.
"""

from __future__ import annotations

import hashlib
import mmap
import os
from dataclasses import dataclass
from typing import TYPE_CHECKING

from pydantic import BaseModel, ConfigDict

from ergenome.codec import BinaryReader, BinaryWriter
from ergenome.crypto import NonceLedger, salsa20_xor
from ergenome.ebtree import BPlusTree, ByteLRUCache, EncryptedTree, directory_length, save_tree
from ergenome.erindex.blocks import encode_blocks, encode_factorization_header, header_for
from ergenome.erindex.core import ERIndex
from ergenome.erindex.sources import EncryptedFactorSource
from ergenome.logging import get_logger
from ergenome.models import TreeKind
from ergenome.validation.exceptions import (
    AuthorizationError,
    IndexFormatError,
    NonceSpaceError,
    ValidationError,
)

if TYPE_CHECKING:
    from pathlib import Path

    from ergenome.crypto import KeyPortfolio, SymmetricKey
    from ergenome.ebtree import SearchTree
    from ergenome.erindex.protocol import FactorSource
    from ergenome.fm import ReferenceIndex
    from ergenome.rlz import Factorization

logger = get_logger(__name__)

MAGIC = b"ERIX"
FORMAT_VERSION = 2
MAX_BLOCKS = 10_000_000
DEFAULT_CACHE_BYTES = 256 * 1024 * 1024
_PREAMBLE = len(MAGIC) + 2 + 4
_DIGEST = 32
_TRAILER = 2 * _DIGEST
_TREE_ORDER = (TreeKind.REVERSE, TreeKind.FORWARD, TreeKind.POSITION)


@dataclass(frozen=True, slots=True)
class IndexHeader:
    """Decrypted index header.

    Attributes:
        reference_id: Reference the index was built against
        text_hash: Hex SHA-256 of the reference text
        text_len: Reference length
        individuals: (id, offset, length) of each factorization section, in ordinal order
        block_size: Factors per block
        l_max: Longest factor length
        tree_order: Order N of the trees
        trees: (offset, length) of each tree section
    """

    reference_id: str
    text_hash: str
    text_len: int
    individuals: tuple[tuple[str, int, int], ...]
    block_size: int
    l_max: int
    tree_order: int
    trees: dict[TreeKind, tuple[int, int]]

    @property
    def individual_ids(self) -> list[str]:
        return [individual_id for individual_id, _, _ in self.individuals]


def _encode_header(header: IndexHeader) -> bytes:
    writer = BinaryWriter()
    writer.text(header.reference_id)
    writer.raw(bytes.fromhex(header.text_hash))
    writer.u64(header.text_len)
    writer.u32(len(header.individuals))
    for individual_id, offset, length in header.individuals:
        writer.text(individual_id)
        writer.u64(offset)
        writer.u64(length)
    writer.u32(header.block_size)
    writer.u64(header.l_max)
    writer.u32(header.tree_order)
    for kind in _TREE_ORDER:
        offset, length = header.trees[kind]
        writer.u64(offset)
        writer.u64(length)
    body = writer.getvalue()
    return body + hashlib.sha256(body).digest()


def _decode_header(plain: bytes) -> IndexHeader:
    body, digest = plain[:-_DIGEST], plain[-_DIGEST:]
    if len(plain) < _DIGEST or hashlib.sha256(body).digest() != digest:
        raise AuthorizationError("Cannot decrypt the index header: wrong system key")
    reader = BinaryReader(body)
    reference_id = reader.text()
    hash_hex = reader.raw(_DIGEST).hex()
    text_len = reader.u64()
    individuals = tuple((reader.text(), reader.u64(), reader.u64()) for _ in range(reader.u32()))
    block_size = reader.u32()
    l_max = reader.u64()
    tree_order = reader.u32()
    trees = {kind: (reader.u64(), reader.u64()) for kind in _TREE_ORDER}
    return IndexHeader(
        reference_id=reference_id,
        text_hash=hash_hex,
        text_len=text_len,
        individuals=individuals,
        block_size=block_size,
        l_max=l_max,
        tree_order=tree_order,
        trees=trees,
    )


# ----------------------------------------------------------------------
# Save
# ----------------------------------------------------------------------


def _factorization_section(fz: Factorization, key: SymmetricKey, ledger: NonceLedger) -> bytes:
    if fz.block_count >= MAX_BLOCKS:
        raise NonceSpaceError(
            f"Factorization of {fz.individual_id} has {fz.block_count} blocks, "
            f"limit is {MAX_BLOCKS - 1}"
        )
    blocks = encode_blocks(fz)
    header = encode_factorization_header(header_for(fz, [len(block) for block in blocks]))
    header_ct = ledger.encrypt(key, 0, header)
    section = BinaryWriter()
    section.varint(len(header_ct))
    section.raw(header_ct)
    for number, block in enumerate(blocks):
        section.raw(ledger.encrypt(key, number + 1, block))
    return section.getvalue()


def dump_index(index: ERIndex, portfolio: KeyPortfolio, ledger: NonceLedger | None = None) -> bytes:
    """Serialize and encrypt a freshly built index.

    Raises:
        ValidationError: If the index was opened from a file rather than built
        AuthorizationError: If ``portfolio`` lacks an individual key
        NonceSpaceError: If a tree or factorization exceeds its nonce range
    """
    if index.factorizations is None:
        raise ValidationError("Only a freshly built index can be saved")
    ledger = ledger or NonceLedger()
    keys = [portfolio.require_key(individual_id) for individual_id in index.individual_ids]
    system_key = portfolio.system_key

    factorization_sections = [
        _factorization_section(fz, key, ledger)
        for fz, key in zip(index.factorizations, keys, strict=True)
    ]
    tree_sections = {}
    for kind in _TREE_ORDER:
        tree = index.trees[kind]
        if not isinstance(tree, BPlusTree):
            raise ValidationError(f"The {kind} tree is not an in-memory tree")
        tree_sections[kind] = save_tree(tree, kind, system_key, keys, ledger)

    def header_with(
        individuals: list[tuple[str, int, int]], trees: dict[TreeKind, tuple[int, int]]
    ) -> IndexHeader:
        return IndexHeader(
            reference_id=index.reference.reference_id,
            text_hash=index.reference.text_hash,
            text_len=index.reference.text_len,
            individuals=tuple(individuals),
            block_size=index.block_size,
            l_max=index.l_max,
            tree_order=index.tree_order,
            trees=trees,
        )

    # Fixed-width offsets: the placeholder header has the final length.
    placeholder = header_with(
        [(individual_id, 0, 0) for individual_id in index.individual_ids],
        dict.fromkeys(_TREE_ORDER, (0, 0)),
    )
    offset = _PREAMBLE + len(_encode_header(placeholder))
    individuals = []
    for individual_id, section in zip(index.individual_ids, factorization_sections, strict=True):
        individuals.append((individual_id, offset, len(section)))
        offset += len(section)
    trees = {}
    for kind in _TREE_ORDER:
        trees[kind] = (offset, len(tree_sections[kind]))
        offset += len(tree_sections[kind])

    header_ct = ledger.encrypt(system_key, 0, _encode_header(header_with(individuals, trees)))
    directories = b"".join(
        tree_sections[kind][: directory_length(tree_sections[kind])] for kind in _TREE_ORDER
    )

    out = BinaryWriter()
    out.raw(MAGIC)
    out.u16(FORMAT_VERSION)
    out.blob(header_ct)
    for section in factorization_sections:
        out.raw(section)
    for kind in _TREE_ORDER:
        out.raw(tree_sections[kind])
    out.raw(hashlib.sha256(header_ct).digest())
    out.raw(hashlib.sha256(directories).digest())
    return out.getvalue()


def save_index(index: ERIndex, portfolio: KeyPortfolio, path: Path) -> int:
    """Write ``index`` to ``path`` and return the file size.

    The file is written to a sibling temporary file and moved into place.
    """
    ledger = NonceLedger()
    data = dump_index(index, portfolio, ledger)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
    logger.info(
        "Index saved",
        path=str(path),
        size=len(data),
        individuals=len(index.individual_ids),
        segments=len(ledger),
    )
    return len(data)


# ----------------------------------------------------------------------
# Open
# ----------------------------------------------------------------------


def _read_header(data: memoryview, system_key: SymmetricKey) -> tuple[IndexHeader, int]:
    """Check framing and trailer, decrypt the header; returns it and the header ct length."""
    if len(data) < _PREAMBLE + _TRAILER or bytes(data[: len(MAGIC)]) != MAGIC:
        raise IndexFormatError("Not an ER-index file")
    reader = BinaryReader(data, len(MAGIC))
    version = reader.u16()
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"Unsupported ER-index version {version}")
    header_ct = reader.blob()
    trailer = bytes(data[-_TRAILER:])
    if hashlib.sha256(header_ct).digest() != trailer[:_DIGEST]:
        raise IndexFormatError("Index header checksum mismatch")

    header = _decode_header(salsa20_xor(system_key, 0, header_ct))
    body_end = len(data) - _TRAILER
    sections = [(offset, length) for _, offset, length in header.individuals]
    sections += [header.trees[kind] for kind in _TREE_ORDER]
    if any(offset < _PREAMBLE or offset + length > body_end for offset, length in sections):
        raise IndexFormatError("Index section outside the file")
    directories = b"".join(
        bytes(data[offset : offset + directory_length(data[offset : offset + length])])
        for offset, length in (header.trees[kind] for kind in _TREE_ORDER)
    )
    if hashlib.sha256(directories).digest() != trailer[_DIGEST:]:
        raise IndexFormatError("Tree directory checksum mismatch")
    return header, len(header_ct)


def open_index(
    path: Path,
    portfolio: KeyPortfolio,
    reference: ReferenceIndex,
    cache_bytes: int = DEFAULT_CACHE_BYTES,
    *,
    parallel_splits: bool = False,
    workers: int = 1,
) -> ERIndex:
    """Open an ER-index file for the individuals ``portfolio`` holds keys for.

    Args:
        path: Index file
        portfolio: System key plus any subset of individual keys
        reference: Reference indexes the file was built against
        cache_bytes: Bound for decrypted blocks and nodes kept in memory
        parallel_splits: Evaluate split points on a thread pool
        workers: Threads for split-point evaluation

    Raises:
        IndexFormatError: On a missing, truncated or damaged file, or a reference mismatch
        AuthorizationError: If the portfolio's system key does not open the header
    """
    try:
        with path.open("rb") as fh:
            mapped = mmap.mmap(fh.fileno(), 0, access=mmap.ACCESS_READ)
    except (OSError, ValueError) as e:
        raise IndexFormatError(f"Cannot open index file {path}") from e
    view = memoryview(mapped)

    def release() -> None:
        view.release()
        try:
            mapped.close()
        except BufferError:
            logger.warning("Index file still referenced, left to the collector", path=str(path))

    try:
        header, _ = _read_header(view, portfolio.system_key)
        if header.text_hash != reference.text_hash:
            raise IndexFormatError(
                f"Index was built against reference {header.reference_id} with a different text"
            )
        cache = ByteLRUCache(cache_bytes)
        ids = header.individual_ids
        keys = [portfolio.key_for(individual_id) for individual_id in ids]
        sources: list[FactorSource | None] = []
        for (individual_id, offset, length), key in zip(header.individuals, keys, strict=True):
            if key is None:
                sources.append(None)
            else:
                sources.append(
                    EncryptedFactorSource(
                        individual_id,
                        view[offset : offset + length],
                        key,
                        cache,
                        reference.start_rows,
                    )
                )
        trees: dict[TreeKind, SearchTree] = {}
        for kind in _TREE_ORDER:
            offset, length = header.trees[kind]
            trees[kind] = EncryptedTree(
                view[offset : offset + length], kind, portfolio.system_key, keys, cache
            )
    except BaseException:
        release()
        raise

    logger.info(
        "Index opened",
        path=str(path),
        reference_id=header.reference_id,
        individuals=len(ids),
        authorized=sum(key is not None for key in keys),
    )
    return ERIndex(
        reference=reference,
        individual_ids=ids,
        block_size=header.block_size,
        l_max=header.l_max,
        tree_order=header.tree_order,
        sources=sources,
        trees=trees,
        cache=cache,
        parallel_splits=parallel_splits,
        workers=workers,
        on_close=release,
    )


class IndexStats(BaseModel):
    """Byte sizes of the sections of an index file.

    ``framing_bytes`` covers magic, version, header length prefix and the
    trailer. Tree sizes include their directories, which are also itemized
    in ``tree_directory_bytes``.
    """

    model_config = ConfigDict(frozen=True)

    reference_id: str
    total_bytes: int
    framing_bytes: int
    header_bytes: int
    factorization_bytes: dict[str, int]
    reverse_tree_bytes: int
    forward_tree_bytes: int
    position_tree_bytes: int
    tree_directory_bytes: int

    @property
    def factorizations_total(self) -> int:
        return sum(self.factorization_bytes.values())

    @property
    def section_sum(self) -> int:
        return (
            self.framing_bytes
            + self.header_bytes
            + self.factorizations_total
            + self.reverse_tree_bytes
            + self.forward_tree_bytes
            + self.position_tree_bytes
        )


def index_stats(path: Path, system_key: SymmetricKey) -> IndexStats:
    """Section sizes of an index file; only the system key is needed.

    Raises:
        IndexFormatError: If the file is missing or damaged
        AuthorizationError: If ``system_key`` does not open the header
    """
    try:
        data = path.read_bytes()
    except OSError as e:
        raise IndexFormatError(f"Cannot read index file {path}") from e
    view = memoryview(data)
    header, header_len = _read_header(view, system_key)
    tree_sizes = {kind: length for kind, (_, length) in header.trees.items()}
    directories = sum(
        directory_length(view[offset : offset + length]) for offset, length in header.trees.values()
    )
    return IndexStats(
        reference_id=header.reference_id,
        total_bytes=len(data),
        framing_bytes=_PREAMBLE + _TRAILER,
        header_bytes=header_len,
        factorization_bytes={individual_id: length for individual_id, _, length in header.individuals},
        reverse_tree_bytes=tree_sizes[TreeKind.REVERSE],
        forward_tree_bytes=tree_sizes[TreeKind.FORWARD],
        position_tree_bytes=tree_sizes[TreeKind.POSITION],
        tree_directory_bytes=directories,
    )
