"""The database catalog (``catalog.xml``).

Schema::

    <catalog version="1">
      <individuals>
        <individual id="..." label="...">
          <sequence chromosome="..." fasta="..."/>
        </individual>
      </individuals>
      <users><user id="..." public_key="..."/></users>
      <references><reference id="..." fasta="..." index="..." text_hash="..."/></references>
      <indexes><index chromosome="..." path="..." individuals="a,b" build_time_s="..."/></indexes>
      <grants><grant user="..." individual="..."/></grants>
    </catalog>

Children are written sorted so that reading and writing back is byte-stable.
Paths are stored as given (relative paths are relative to the database root).
"""

from __future__ import annotations

import os
from typing import TYPE_CHECKING

from lxml import etree
from pydantic import BaseModel, ConfigDict, Field

from ergenome.validation.exceptions import CatalogError

if TYPE_CHECKING:
    from pathlib import Path

CATALOG_VERSION = "1"

_PARSER = etree.XMLParser(resolve_entities=False, no_network=True)


class _Record(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class IndividualRecord(_Record):
    """One individual and its FASTA file per chromosome."""

    id: str
    label: str = ""
    sequences: dict[str, str] = Field(default_factory=dict)


class UserRecord(_Record):
    id: str
    public_key: str


class ReferenceRecord(_Record):
    """A chromosome reference; ``index`` and ``text_hash`` are set once it is built."""

    id: str
    fasta: str
    index: str = ""
    text_hash: str = ""

    @property
    def is_built(self) -> bool:
        return bool(self.index and self.text_hash)


class IndexRecord(_Record):
    chromosome: str
    path: str
    individuals: tuple[str, ...]
    build_time_s: float = 0.0


class GrantRecord(_Record):
    user: str
    individual: str


class Catalog(_Record):
    """Immutable catalog; the ``with_*`` methods return updated copies.

    Raises:
        CatalogError: From ``with_*`` on duplicate ids or unknown targets
    """

    individuals: tuple[IndividualRecord, ...] = ()
    users: tuple[UserRecord, ...] = ()
    references: tuple[ReferenceRecord, ...] = ()
    indexes: tuple[IndexRecord, ...] = ()
    grants: tuple[GrantRecord, ...] = ()

    def individual(self, individual_id: str) -> IndividualRecord:
        for record in self.individuals:
            if record.id == individual_id:
                return record
        raise CatalogError(f"Unknown individual {individual_id}")

    def user(self, user_id: str) -> UserRecord:
        for record in self.users:
            if record.id == user_id:
                return record
        raise CatalogError(f"Unknown user {user_id}")

    def reference(self, chromosome: str) -> ReferenceRecord:
        for record in self.references:
            if record.id == chromosome:
                return record
        raise CatalogError(f"Unknown reference {chromosome}")

    def index_for(self, chromosome: str) -> IndexRecord:
        for record in self.indexes:
            if record.chromosome == chromosome:
                return record
        raise CatalogError(f"No index built for reference {chromosome}")

    def granted_to(self, user_id: str) -> list[str]:
        return sorted(g.individual for g in self.grants if g.user == user_id)

    def with_individual(self, record: IndividualRecord) -> Catalog:
        """Add an individual, or merge new chromosome sequences into an existing one."""
        existing = next((i for i in self.individuals if i.id == record.id), None)
        if existing is None:
            return self.model_copy(update={"individuals": (*self.individuals, record)})
        clash = set(existing.sequences) & set(record.sequences)
        if clash:
            raise CatalogError(
                f"Individual {record.id} already enrolled for {', '.join(sorted(clash))}"
            )
        merged = existing.model_copy(update={"sequences": {**existing.sequences, **record.sequences}})
        rest = tuple(i for i in self.individuals if i.id != record.id)
        return self.model_copy(update={"individuals": (*rest, merged)})

    def with_user(self, record: UserRecord) -> Catalog:
        if any(u.id == record.id for u in self.users):
            raise CatalogError(f"Duplicate user id {record.id}")
        return self.model_copy(update={"users": (*self.users, record)})

    def with_reference(self, record: ReferenceRecord, *, replace: bool = False) -> Catalog:
        exists = any(r.id == record.id for r in self.references)
        if exists and not replace:
            raise CatalogError(f"Duplicate reference id {record.id}")
        rest = tuple(r for r in self.references if r.id != record.id)
        return self.model_copy(update={"references": (*rest, record)})

    def with_index(self, record: IndexRecord) -> Catalog:
        self.reference(record.chromosome)
        rest = tuple(i for i in self.indexes if i.chromosome != record.chromosome)
        return self.model_copy(update={"indexes": (*rest, record)})

    def with_grant(self, record: GrantRecord) -> Catalog:
        self.user(record.user)
        self.individual(record.individual)
        if record in self.grants:
            return self
        return self.model_copy(update={"grants": (*self.grants, record)})


# ----------------------------------------------------------------------
# XML
# ----------------------------------------------------------------------


def catalog_to_xml(catalog: Catalog) -> bytes:
    root = etree.Element("catalog", version=CATALOG_VERSION)

    individuals = etree.SubElement(root, "individuals")
    for ind in sorted(catalog.individuals, key=lambda r: r.id):
        element = etree.SubElement(individuals, "individual", id=ind.id, label=ind.label)
        for chromosome in sorted(ind.sequences):
            fasta = ind.sequences[chromosome]
            etree.SubElement(element, "sequence", chromosome=chromosome, fasta=fasta)

    users = etree.SubElement(root, "users")
    for user in sorted(catalog.users, key=lambda r: r.id):
        etree.SubElement(users, "user", id=user.id, public_key=user.public_key)

    references = etree.SubElement(root, "references")
    for ref in sorted(catalog.references, key=lambda r: r.id):
        etree.SubElement(
            references, "reference", id=ref.id, fasta=ref.fasta, index=ref.index, text_hash=ref.text_hash
        )

    indexes = etree.SubElement(root, "indexes")
    for idx in sorted(catalog.indexes, key=lambda r: r.chromosome):
        etree.SubElement(
            indexes,
            "index",
            chromosome=idx.chromosome,
            path=idx.path,
            individuals=",".join(idx.individuals),
            build_time_s=repr(idx.build_time_s),
        )

    grants = etree.SubElement(root, "grants")
    for grant in sorted(catalog.grants, key=lambda r: (r.user, r.individual)):
        etree.SubElement(grants, "grant", user=grant.user, individual=grant.individual)

    etree.indent(root)
    return etree.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def _section(root: etree._Element, tag: str) -> list[etree._Element]:
    section = root.find(tag)
    if section is None:
        return []
    return list(section.iterchildren(tag=etree.Element))


def _attr(element: etree._Element, name: str) -> str:
    value = element.get(name)
    if value is None:
        raise CatalogError(f"<{element.tag}> lacks attribute {name!r}")
    return value


def catalog_from_xml(data: bytes) -> Catalog:
    """Parse ``catalog.xml`` content.

    Raises:
        CatalogError: On malformed XML, an unknown version or missing attributes
    """
    try:
        root = etree.fromstring(data, parser=_PARSER)
    except etree.XMLSyntaxError as e:
        raise CatalogError(f"Malformed catalog: {e}") from e
    if root.tag != "catalog" or root.get("version") != CATALOG_VERSION:
        raise CatalogError(f"Unsupported catalog version {root.get('version')!r}")

    individuals = tuple(
        IndividualRecord(
            id=_attr(e, "id"),
            label=e.get("label", ""),
            sequences={_attr(s, "chromosome"): _attr(s, "fasta") for s in e.iter("sequence")},
        )
        for e in _section(root, "individuals")
    )
    users = tuple(
        UserRecord(id=_attr(e, "id"), public_key=_attr(e, "public_key"))
        for e in _section(root, "users")
    )
    references = tuple(
        ReferenceRecord(
            id=_attr(e, "id"),
            fasta=_attr(e, "fasta"),
            index=e.get("index", ""),
            text_hash=e.get("text_hash", ""),
        )
        for e in _section(root, "references")
    )
    try:
        indexes = tuple(
            IndexRecord(
                chromosome=_attr(e, "chromosome"),
                path=_attr(e, "path"),
                individuals=tuple(filter(None, _attr(e, "individuals").split(","))),
                build_time_s=float(e.get("build_time_s", "0.0")),
            )
            for e in _section(root, "indexes")
        )
    except ValueError as e:
        raise CatalogError(f"Malformed index record: {e}") from e
    grants = tuple(
        GrantRecord(user=_attr(e, "user"), individual=_attr(e, "individual"))
        for e in _section(root, "grants")
    )
    return Catalog(
        individuals=individuals,
        users=users,
        references=references,
        indexes=indexes,
        grants=grants,
    )


def read_catalog(path: Path) -> Catalog:
    """Load ``catalog.xml``.

    Raises:
        CatalogError: If the file is missing or malformed
    """
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CatalogError(f"Cannot read catalog {path}: {e}") from e
    return catalog_from_xml(data)


def write_catalog(catalog: Catalog, path: Path) -> None:
    """Replace ``path`` atomically with the serialized catalog."""
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(catalog_to_xml(catalog))
    os.replace(tmp, path)
