"""Crypto component: Salsa20 contexts, symmetric keys, RSA-sealed key portfolios."""

from ergenome.crypto.cipher import (
    STREAM_LIMIT,
    EncryptionContext,
    NonceLedger,
    create_encryption_context,
    salsa20_keystream,
    salsa20_xor,
)
from ergenome.crypto.keys import (
    KEY_SIZE,
    SymmetricKey,
    UserKeyPair,
    generate_key,
    generate_user_keypair,
    import_rsa_key,
    write_keypair,
)
from ergenome.crypto.portfolio import (
    KeyPortfolio,
    load_portfolio,
    open_portfolio,
    save_portfolio,
    seal_portfolio,
    sealed_overhead,
)

__all__ = [
    "KEY_SIZE",
    "STREAM_LIMIT",
    "EncryptionContext",
    "KeyPortfolio",
    "NonceLedger",
    "SymmetricKey",
    "UserKeyPair",
    "create_encryption_context",
    "generate_key",
    "generate_user_keypair",
    "import_rsa_key",
    "load_portfolio",
    "open_portfolio",
    "save_portfolio",
    "seal_portfolio",
    "sealed_overhead",
    "salsa20_keystream",
    "salsa20_xor",
    "write_keypair",
]
