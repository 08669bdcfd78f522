"""CLI base component.

This base provides the ``ergenome`` command-line entry point.
Thin layer that orchestrates components: logs go to stderr, command
results to stdout.

Exit codes: 0 success, 1 no occurrence or cancelled, 2 authorization,
input or index errors, 3 configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import TYPE_CHECKING

import orjson
from pydantic import ValidationError as PydanticValidationError

from ergenome.bench import format_table, run_benchmark
from ergenome.config import ApplicationConfig, BenchConfig, load_config
from ergenome.erdb import ERDatabase, init_db, open_db
from ergenome.erindex import index_stats
from ergenome.logging import bind_context, configure_logging, get_logger
from ergenome.models import LogLevel
from ergenome.sequence import MutationProfile, generate_population, load_fasta, write_fasta
from ergenome.validation import (
    ConfigurationError,
    ErGenomeError,
    validate_pattern,
)

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from ergenome.crypto import KeyPortfolio

EXIT_OK = 0
EXIT_EMPTY = 1
EXIT_ERROR = 2
EXIT_CONFIG = 3

logger = get_logger("cli")


def _int_list(value: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in value.split(",") if part)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from e


def build_parser(config: ApplicationConfig) -> argparse.ArgumentParser:
    """Argument parser whose defaults come from ``config``."""
    parser = argparse.ArgumentParser(
        prog="ergenome",
        description="Encrypted referential self-index for genomic sequence collections",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  ergenome --db db init
  ergenome --db db add-ref chr20 chr20.fa
  ergenome --db db enroll ind1 chr20 ind1.fa
  ergenome --db db keygen user alice
  ergenome --db db grant alice ind1
  ergenome --db db build chr20
  ergenome --db db --user alice locate chr20 ACGTTACG
        """,
    )
    parser.add_argument("--db", type=Path, default=Path(), help="Database root (default: .)")
    parser.add_argument("--user", default="admin", help="Acting user (default: admin)")
    parser.add_argument(
        "--key", type=Path, help="Private key of the user (default: <db>/security/keys/<user>.pem)"
    )
    parser.add_argument("--config", type=Path, help="JSON configuration file")
    parser.add_argument(
        "--log-level",
        type=LogLevel,
        choices=list(LogLevel),
        default=config.log_level,
        help=f"Log level (default: {config.log_level})",
    )
    parser.add_argument("--json-logs", action="store_true", help="Force JSON log lines")

    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("init", help="Create an empty database with an admin keypair")

    keygen = sub.add_parser("keygen", help="Generate user or individual keys")
    keygen.add_argument("kind", choices=["user", "individual"])
    keygen.add_argument("id")
    keygen.add_argument("--out", type=Path, help="Directory for a user's key files")

    grant = sub.add_parser("grant", help="Give a user access to an individual")
    grant.add_argument("user_id")
    grant.add_argument("individual_id")
    grant.add_argument("--revoke", action="store_true", help="Revoke instead (not supported)")

    add_ref = sub.add_parser("add-ref", help="Register and build a chromosome reference")
    add_ref.add_argument("chromosome")
    add_ref.add_argument("fasta", type=Path)

    enroll = sub.add_parser("enroll", help="Register an individual's FASTA for a chromosome")
    enroll.add_argument("individual_id")
    enroll.add_argument("chromosome")
    enroll.add_argument("fasta", type=Path)
    enroll.add_argument("--label", default="")

    build = sub.add_parser("build", help="Build the ER-index of a chromosome")
    build.add_argument("chromosome")
    build.add_argument("--individuals", help="Comma-separated ids (default: all enrolled)")
    build.add_argument("--block-size", type=int, default=config.index.block_size)
    build.add_argument("--tree-order", type=int, default=config.tree.order)
    build.add_argument("--workers", type=int, default=config.index.workers)

    locate = sub.add_parser("locate", help="Find a pattern in the authorized individuals")
    locate.add_argument("chromosome")
    locate.add_argument("pattern")
    locate.add_argument(
        "--parallel-splits", action="store_true", default=config.index.parallel_splits
    )

    extract = sub.add_parser("extract", help="Print part of an individual's sequence")
    extract.add_argument("chromosome")
    extract.add_argument("individual_id")
    extract.add_argument("start", type=int)
    extract.add_argument("length", type=int)

    stats = sub.add_parser("stats", help="Print the section sizes of an ER-index")
    stats.add_argument("chromosome")

    bench = sub.add_parser("bench", help="Benchmark pattern search")
    bench.add_argument("chromosome")
    bench.add_argument("--lengths", type=_int_list, default=config.bench.pattern_lengths)
    bench.add_argument("--patterns", type=int, default=config.bench.patterns_per_length)
    bench.add_argument("--seed", type=int, default=config.bench.seed)
    bench.add_argument("--repeat", type=int, default=config.bench.repeat)
    bench.add_argument("--concurrent", action="store_true", default=config.bench.concurrent)
    bench.add_argument("--out", type=Path, help="Directory for CSV and JSON results")

    gen = sub.add_parser("gen-population", help="Write mutated copies of a reference FASTA")
    gen.add_argument("--ref", dest="reference", type=Path, required=True, help="Reference FASTA")
    gen.add_argument("--out", type=Path, required=True, help="Directory for the FASTA files")
    gen.add_argument("--count", type=int, default=10)
    gen.add_argument(
        "--sub", dest="substitution_rate", type=float, default=0.008, help="Substitutions per base"
    )
    gen.add_argument(
        "--ins", dest="insertion_rate", type=float, default=0.001, help="Insertions per base"
    )
    gen.add_argument(
        "--del", dest="deletion_rate", type=float, default=0.001, help="Deletions per base"
    )
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--prefix", default="individual")
    return parser


def _portfolio(db: ERDatabase, args: argparse.Namespace) -> KeyPortfolio:
    key_path = args.key or db.private_key_path(args.user)
    try:
        private_pem = key_path.read_bytes()
    except OSError as e:
        raise ErGenomeError(f"Cannot read private key {key_path}") from e
    return db.load_user_portfolio(args.user, private_pem)


def _cmd_init(args: argparse.Namespace, _config: ApplicationConfig) -> int:
    init_db(args.db)
    print(args.db)
    return EXIT_OK


def _cmd_gen_population(args: argparse.Namespace, _config: ApplicationConfig) -> int:
    reference = load_fasta(args.reference, individual_id="reference")
    profile = MutationProfile(
        substitution_rate=args.substitution_rate,
        insertion_rate=args.insertion_rate,
        deletion_rate=args.deletion_rate,
        seed=args.seed,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    for member in generate_population(reference, args.count, profile, args.prefix):
        path = args.out / f"{member.id}.fa"
        write_fasta(member, path)
        print(path)
    return EXIT_OK


def _cmd_keygen(args: argparse.Namespace, _config: ApplicationConfig) -> int:
    db = open_db(args.db)
    if args.kind == "user":
        for path in db.keygen_user(args.id, args.out):
            print(path)
    else:
        db.keygen_individual(args.id)
    return EXIT_OK


def _cmd_grant(args: argparse.Namespace, _config: ApplicationConfig) -> int:
    db = open_db(args.db)
    if args.revoke:
        db.ungrant(args.user_id, args.individual_id)
    db.grant(args.user_id, args.individual_id)
    return EXIT_OK


def _cmd_add_ref(args: argparse.Namespace, config: ApplicationConfig) -> int:
    db = open_db(args.db)
    db.add_reference(args.chromosome, args.fasta)
    print(db.build_reference(args.chromosome, config.fm))
    return EXIT_OK


def _cmd_enroll(args: argparse.Namespace, _config: ApplicationConfig) -> int:
    open_db(args.db).enroll(args.individual_id, args.chromosome, args.fasta, args.label)
    return EXIT_OK


def _cmd_build(args: argparse.Namespace, _config: ApplicationConfig) -> int:
    db = open_db(args.db)
    individuals = args.individuals.split(",") if args.individuals else None
    record = db.build_population_index(
        args.chromosome, individuals, args.block_size, args.tree_order, args.workers
    )
    print(db.resolve(record.path))
    return EXIT_OK


def _cmd_locate(args: argparse.Namespace, config: ApplicationConfig) -> int:
    pattern = validate_pattern(args.pattern)
    db = open_db(args.db)
    with db.open_population_index(
        args.chromosome,
        _portfolio(db, args),
        config.index.cache_bytes,
        parallel_splits=args.parallel_splits,
        workers=config.index.workers,
    ) as index:
        occurrences = index.locate(pattern)
    for occ in occurrences:
        print(f"{occ.individual_id}\t{occ.text_position}")
    logger.info("Pattern located", occurrences=len(occurrences))
    return EXIT_OK if occurrences else EXIT_EMPTY


def _cmd_extract(args: argparse.Namespace, _config: ApplicationConfig) -> int:
    db = open_db(args.db)
    with db.open_population_index(args.chromosome, _portfolio(db, args)) as index:
        print(index.extract(args.individual_id, args.start, args.length))
    return EXIT_OK


def _cmd_stats(args: argparse.Namespace, _config: ApplicationConfig) -> int:
    db = open_db(args.db)
    record = db.catalog.index_for(args.chromosome)
    stats = index_stats(db.resolve(record.path), _portfolio(db, args).system_key)
    print(orjson.dumps(stats.model_dump(), option=orjson.OPT_INDENT_2).decode())
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace, config: ApplicationConfig) -> int:
    db = open_db(args.db)
    bench_config = BenchConfig.model_validate({
        **config.bench.model_dump(),
        "pattern_lengths": args.lengths,
        "patterns_per_length": args.patterns,
        "seed": args.seed,
        "repeat": args.repeat,
        "concurrent": args.concurrent,
    })
    report = run_benchmark(
        db,
        args.chromosome,
        _portfolio(db, args),
        bench_config,
        args.out,
        build_workers=config.index.workers,
    )
    print(format_table(report))
    return EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace, ApplicationConfig], int]] = {
    "init": _cmd_init,
    "gen-population": _cmd_gen_population,
    "keygen": _cmd_keygen,
    "grant": _cmd_grant,
    "add-ref": _cmd_add_ref,
    "enroll": _cmd_enroll,
    "build": _cmd_build,
    "locate": _cmd_locate,
    "extract": _cmd_extract,
    "stats": _cmd_stats,
    "bench": _cmd_bench,
}


def main(argv: Sequence[str] | None = None) -> None:
    """Main entry point for command line usage."""
    # Initialize logging first
    configure_logging()

    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config", type=Path)
        known, _ = pre.parse_known_args(argv)
        config = load_config(known.config)
    except ConfigurationError as exc:
        logger.critical(
            "Configuration error",
            error=str(exc),
            suggestion="Check config/config.json syntax and values",
            exit_code=EXIT_CONFIG,
        )
        sys.exit(EXIT_CONFIG)

    args = build_parser(config).parse_args(argv)
    configure_logging(args.log_level, json_output=True if args.json_logs else None)
    bind_context(user=args.user)
    logger.info("Command started", command=args.command, version=config.version)

    try:
        if "chromosome" in args:
            bind_context(chromosome=args.chromosome)
        code = COMMANDS[args.command](args, config)

    except KeyboardInterrupt:
        logger.warning("Application cancelled by user", exit_code=EXIT_EMPTY, signal="SIGINT")
        sys.exit(EXIT_EMPTY)

    except ConfigurationError as exc:
        logger.critical("Configuration error", error=str(exc), exit_code=EXIT_CONFIG)
        sys.exit(EXIT_CONFIG)

    except ErGenomeError as exc:
        logger.critical(
            "Command failed",
            error=str(exc),
            error_type=type(exc).__name__,
            exit_code=EXIT_ERROR,
        )
        sys.exit(EXIT_ERROR)

    except PydanticValidationError as exc:
        logger.critical("Input validation failed", error=str(exc), exit_code=EXIT_ERROR)
        sys.exit(EXIT_ERROR)

    except OSError as exc:
        logger.critical("I/O error", error=str(exc), exit_code=EXIT_ERROR)
        sys.exit(EXIT_ERROR)

    logger.info("Command completed", command=args.command, exit_code=code)
    sys.exit(code)
