"""The ER-database: directory layout, users, individuals, references and grants.

Layout::

    <root>/catalog.xml
    <root>/references/<chromosome>.erfm
    <root>/indexes/<chromosome>.erix
    <root>/security/admin.portfolio
    <root>/security/<user>.portfolio
    <root>/security/keys/<user>.pub.pem, <user>.pem

The administrator portfolio holds the system key and every individual
key; it is sealed with the administrator keypair created by
:func:`init_db`. Individual keys exist only inside sealed portfolios.
Granting re-seals the grantee's portfolio from the administrator's.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import TYPE_CHECKING

from ergenome.crypto import (
    KeyPortfolio,
    generate_key,
    generate_user_keypair,
    import_rsa_key,
    load_portfolio,
    save_portfolio,
    write_keypair,
)
from ergenome.erdb.catalog import (
    Catalog,
    GrantRecord,
    IndexRecord,
    IndividualRecord,
    ReferenceRecord,
    UserRecord,
    read_catalog,
    write_catalog,
)
from ergenome.erindex import build_index, open_index, save_index
from ergenome.fm import (
    build_reference_index,
    build_reference_index_from_config,
    load_reference_index,
    save_reference_index,
    text_hash,
)
from ergenome.logging import get_logger
from ergenome.sequence import load_fasta, read_fasta
from ergenome.validation.core import validate_identifier
from ergenome.validation.exceptions import (
    AuthorizationError,
    CatalogError,
    UnsupportedOperationError,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    from ergenome.config import FMConfig
    from ergenome.erindex import ERIndex
    from ergenome.fm import ReferenceIndex
    from ergenome.sequence import Sequence as GenomeSequence

logger = get_logger(__name__)

CATALOG_FILE = "catalog.xml"
ADMIN_PORTFOLIO = "admin.portfolio"
DEFAULT_ADMIN = "admin"


class ERDatabase:
    """Handle on an ER-database directory.

    Every mutation reads the catalog, applies the change and writes it back
    atomically; there is a single writer at a time.
    """

    def __init__(self, root: Path, admin_id: str = DEFAULT_ADMIN) -> None:
        self.root = Path(root)
        self.admin_id = admin_id

    # ------------------------------------------------------------------
    # Paths
    # ------------------------------------------------------------------

    @property
    def catalog_path(self) -> Path:
        return self.root / CATALOG_FILE

    @property
    def references_dir(self) -> Path:
        return self.root / "references"

    @property
    def indexes_dir(self) -> Path:
        return self.root / "indexes"

    @property
    def security_dir(self) -> Path:
        return self.root / "security"

    @property
    def keys_dir(self) -> Path:
        return self.security_dir / "keys"

    def portfolio_path(self, user_id: str) -> Path:
        return self.security_dir / f"{user_id}.portfolio"

    def private_key_path(self, user_id: str) -> Path:
        return self.keys_dir / f"{user_id}.pem"

    def resolve(self, stored: str) -> Path:
        """Database path of a catalog entry; relative entries are under the root."""
        path = Path(stored)
        return path if path.is_absolute() else self.root / path

    # ------------------------------------------------------------------
    # Catalog and portfolios
    # ------------------------------------------------------------------

    @property
    def catalog(self) -> Catalog:
        return read_catalog(self.catalog_path)

    def _write(self, catalog: Catalog) -> None:
        write_catalog(catalog, self.catalog_path)

    def _public_pem(self, user_id: str) -> bytes:
        record = self.catalog.user(user_id)
        try:
            return self.resolve(record.public_key).read_bytes()
        except OSError as e:
            raise CatalogError(f"Public key of user {user_id} is missing") from e

    def admin_portfolio(self) -> KeyPortfolio:
        """Open the administrator portfolio with the administrator's private key."""
        try:
            private_pem = self.private_key_path(self.admin_id).read_bytes()
        except OSError as e:
            raise AuthorizationError("Administrator private key is not available") from e
        return load_portfolio(self.security_dir / ADMIN_PORTFOLIO, private_pem)

    def store_admin_portfolio(self, portfolio: KeyPortfolio) -> None:
        save_portfolio(portfolio, self._public_pem(self.admin_id), self.security_dir / ADMIN_PORTFOLIO)

    def load_user_portfolio(self, user_id: str, private_pem: bytes) -> KeyPortfolio:
        """Open a user's sealed portfolio.

        Raises:
            AuthorizationError: If the user has no portfolio or the key does not open it
        """
        if user_id == self.admin_id:
            return load_portfolio(self.security_dir / ADMIN_PORTFOLIO, private_pem)
        return load_portfolio(self.portfolio_path(user_id), private_pem)

    # ------------------------------------------------------------------
    # Users and individuals
    # ------------------------------------------------------------------

    def add_user(self, user_id: str, public_pem: bytes) -> UserRecord:
        """Register a user by public key.

        Raises:
            CatalogError: On a duplicate user id
            AuthorizationError: If ``public_pem`` is not an RSA key
        """
        validate_identifier(user_id, "user id")
        import_rsa_key(public_pem, private=False)
        catalog = self.catalog
        record = UserRecord(id=user_id, public_key=f"security/keys/{user_id}.pub.pem")
        updated = catalog.with_user(record)
        self.keys_dir.mkdir(parents=True, exist_ok=True)
        self.resolve(record.public_key).write_bytes(public_pem)
        self._write(updated)
        logger.info("User added", user=user_id)
        return record

    def keygen_user(self, user_id: str, out_dir: Path | None = None) -> tuple[Path, Path]:
        """Create a keypair for a new user and register its public half.

        Returns:
            Paths of the public and private key files
        """
        validate_identifier(user_id, "user id")
        self.catalog.with_user(UserRecord(id=user_id, public_key=""))
        pair = generate_user_keypair()
        paths = write_keypair(pair, out_dir or self.keys_dir, user_id)
        self.add_user(user_id, pair.public_pem)
        return paths

    def enroll(self, individual_id: str, chromosome: str, fasta: Path, label: str = "") -> IndividualRecord:
        """Register an individual's FASTA for one chromosome.

        The individual's key is created separately by :meth:`keygen_individual`.

        Raises:
            CatalogError: If the individual is already enrolled for ``chromosome``
            SequenceFormatError: If the FASTA cannot be read
        """
        validate_identifier(individual_id, "individual id")
        validate_identifier(chromosome, "chromosome id")
        read_fasta(fasta)
        catalog = self.catalog
        updated = catalog.with_individual(
            IndividualRecord(id=individual_id, label=label, sequences={chromosome: str(fasta)})
        )
        self._write(updated)
        logger.info("Individual enrolled", individual_id=individual_id, chromosome=chromosome)
        return updated.individual(individual_id)

    def keygen_individual(self, individual_id: str) -> None:
        """Generate the symmetric key of a registered individual.

        Every individual needs one before it can be indexed or granted.

        Raises:
            CatalogError: If the individual is unknown or already has a key
        """
        self.catalog.individual(individual_id)
        admin = self.admin_portfolio()
        if admin.key_for(individual_id) is not None:
            raise CatalogError(f"Individual {individual_id} already has a key")
        self.store_admin_portfolio(admin.with_keys({individual_id: generate_key()}))
        logger.info("Individual key generated", individual_id=individual_id)

    def grant(self, user_id: str, individual_id: str) -> None:
        """Give ``user_id`` the key of ``individual_id`` and re-seal the user's portfolio.

        Raises:
            CatalogError: If either id is unknown, the user has no public key or
                is the administrator
        """
        if user_id == self.admin_id:
            raise CatalogError("The administrator portfolio already holds every key")
        catalog = self.catalog.with_grant(GrantRecord(user=user_id, individual=individual_id))
        public_pem = self._public_pem(user_id)
        admin = self.admin_portfolio()
        granted = catalog.granted_to(user_id)
        keys = {}
        for granted_id in granted:
            key = admin.key_for(granted_id)
            if key is None:
                raise CatalogError(f"Individual {granted_id} has no key yet")
            keys[granted_id] = key
        save_portfolio(
            KeyPortfolio(user_id, admin.system_key, keys), public_pem, self.portfolio_path(user_id)
        )
        self._write(catalog)
        logger.info("Access granted", user=user_id, individual_id=individual_id, total=len(keys))

    def ungrant(self, user_id: str, individual_id: str) -> None:
        """Revocation is not offered: grants are append-only."""
        raise UnsupportedOperationError(
            f"Cannot revoke {individual_id} from {user_id}: grants are append-only"
        )

    # ------------------------------------------------------------------
    # References and indexes
    # ------------------------------------------------------------------

    def add_reference(self, chromosome: str, fasta: Path) -> ReferenceRecord:
        """Register a chromosome reference FASTA.

        Raises:
            CatalogError: On a duplicate reference id
        """
        validate_identifier(chromosome, "chromosome id")
        read_fasta(fasta)
        record = ReferenceRecord(id=chromosome, fasta=str(fasta))
        self._write(self.catalog.with_reference(record))
        logger.info("Reference added", chromosome=chromosome)
        return record

    def build_reference(self, chromosome: str, fm_config: FMConfig | None = None) -> Path:
        """Build and persist the FM-indexes and tables of a registered reference."""
        record = self.catalog.reference(chromosome)
        text = read_fasta(self.resolve(record.fasta)).data
        if fm_config is None:
            index = build_reference_index(text, reference_id=chromosome)
        else:
            index = build_reference_index_from_config(text, fm_config, chromosome)
        self.references_dir.mkdir(parents=True, exist_ok=True)
        path = self.references_dir / f"{chromosome}.erfm"
        save_reference_index(index, path)
        updated = record.model_copy(
            update={"index": f"references/{chromosome}.erfm", "text_hash": index.text_hash}
        )
        self._write(self.catalog.with_reference(updated, replace=True))
        return path

    def load_reference(self, chromosome: str) -> ReferenceIndex:
        """Load a built reference, refusing it if its FASTA changed since.

        Raises:
            CatalogError: If the reference is not built or is stale
        """
        record = self.catalog.reference(chromosome)
        if not record.is_built:
            raise CatalogError(f"Reference {chromosome} is not built; run add-ref first")
        current = text_hash(read_fasta(self.resolve(record.fasta)).data)
        if current != record.text_hash:
            logger.warning("Stale reference", chromosome=chromosome)
            raise CatalogError(f"Reference {chromosome} changed since it was built; rebuild it")
        reference = load_reference_index(self.resolve(record.index))
        if reference.text_hash != record.text_hash:
            raise CatalogError(f"Reference index of {chromosome} does not match the catalog")
        return reference

    def load_collection(
        self, chromosome: str, individual_ids: Sequence[str] | None = None
    ) -> list[GenomeSequence]:
        """Read the enrolled FASTA of each individual for ``chromosome``, in the given order.

        Raises:
            CatalogError: If nobody is enrolled, or an individual is unknown or
                not enrolled for ``chromosome``
        """
        catalog = self.catalog
        if individual_ids is None:
            individual_ids = sorted(i.id for i in catalog.individuals if chromosome in i.sequences)
        if not individual_ids:
            raise CatalogError(f"No individual is enrolled for {chromosome}")
        collection = []
        for individual_id in individual_ids:
            fasta = catalog.individual(individual_id).sequences.get(chromosome)
            if fasta is None:
                raise CatalogError(f"Individual {individual_id} is not enrolled for {chromosome}")
            collection.append(load_fasta(self.resolve(fasta), individual_id, chromosome))
        return collection

    def build_population_index(
        self,
        chromosome: str,
        individual_ids: Sequence[str] | None = None,
        block_size: int = 128,
        tree_order: int = 256,
        workers: int = 1,
    ) -> IndexRecord:
        """Build and save the ER-index of ``chromosome`` over the given individuals.

        Args:
            chromosome: Built reference to factorize against
            individual_ids: Individuals in ordinal order; all enrolled for ``chromosome`` if None
            block_size: Factors per block
            tree_order: Order of the three trees
            workers: Factorization processes

        Raises:
            CatalogError: On an unregistered individual, one not enrolled for
                ``chromosome``, one without a key,
                or a stale reference
        """
        reference = self.load_reference(chromosome)
        collection = self.load_collection(chromosome, individual_ids)
        individual_ids = [member.id for member in collection]

        admin = self.admin_portfolio()
        missing = [i for i in individual_ids if admin.key_for(i) is None]
        if missing:
            raise CatalogError(
                f"Individual {missing[0]} has no key; run keygen individual {missing[0]}"
            )
        started = time.perf_counter()
        index = build_index(collection, reference, admin, block_size, tree_order, workers)
        self.indexes_dir.mkdir(parents=True, exist_ok=True)
        path = self.indexes_dir / f"{chromosome}.erix"
        save_index(index, admin, path)
        build_time = time.perf_counter() - started

        record = IndexRecord(
            chromosome=chromosome,
            path=f"indexes/{chromosome}.erix",
            individuals=tuple(individual_ids),
            build_time_s=round(build_time, 6),
        )
        self._write(self.catalog.with_index(record))
        logger.info(
            "Population index built",
            chromosome=chromosome,
            individuals=len(individual_ids),
            build_time_s=record.build_time_s,
        )
        return record

    def open_population_index(
        self,
        chromosome: str,
        portfolio: KeyPortfolio,
        cache_bytes: int | None = None,
        *,
        parallel_splits: bool = False,
        workers: int = 1,
    ) -> ERIndex:
        """Open the ER-index of ``chromosome`` for the holder of ``portfolio``."""
        record = self.catalog.index_for(chromosome)
        reference = self.load_reference(chromosome)
        kwargs = {} if cache_bytes is None else {"cache_bytes": cache_bytes}
        return open_index(
            self.resolve(record.path),
            portfolio,
            reference,
            parallel_splits=parallel_splits,
            workers=workers,
            **kwargs,
        )


def init_db(root: Path, admin_id: str = DEFAULT_ADMIN) -> ERDatabase:
    """Create the directory skeleton, an empty catalog, the admin keypair and portfolio.

    Raises:
        CatalogError: If ``root`` already holds a catalog
    """
    db = ERDatabase(root, admin_id)
    if db.catalog_path.exists():
        raise CatalogError(f"{root} already holds an ER-database")
    for directory in (db.references_dir, db.indexes_dir, db.security_dir, db.keys_dir):
        directory.mkdir(parents=True, exist_ok=True)
    write_catalog(Catalog(), db.catalog_path)

    pair = generate_user_keypair()
    write_keypair(pair, db.keys_dir, admin_id)
    db.add_user(admin_id, pair.public_pem)
    db.store_admin_portfolio(KeyPortfolio(admin_id, generate_key()))
    logger.info("Database initialised", root=str(root), admin=admin_id)
    return db


def open_db(root: Path, admin_id: str = DEFAULT_ADMIN) -> ERDatabase:
    """Handle on an existing database.

    Raises:
        CatalogError: If ``root`` holds no catalog
    """
    db = ERDatabase(root, admin_id)
    if not db.catalog_path.is_file():
        raise CatalogError(f"No ER-database at {root}; run init first")
    return db
