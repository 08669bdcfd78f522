"""ER-database component: catalog, directory layout, users, individuals and grants."""

from ergenome.erdb.catalog import (
    CATALOG_VERSION,
    Catalog,
    GrantRecord,
    IndexRecord,
    IndividualRecord,
    ReferenceRecord,
    UserRecord,
    catalog_from_xml,
    catalog_to_xml,
    read_catalog,
    write_catalog,
)
from ergenome.erdb.core import ERDatabase, init_db, open_db

__all__ = [
    "CATALOG_VERSION",
    "Catalog",
    "ERDatabase",
    "GrantRecord",
    "IndexRecord",
    "IndividualRecord",
    "ReferenceRecord",
    "UserRecord",
    "catalog_from_xml",
    "catalog_to_xml",
    "init_db",
    "open_db",
    "read_catalog",
    "write_catalog",
]
