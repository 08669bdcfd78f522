"""Logging component.

Structured logging with structlog. Log records go to stderr so that
command results written to stdout stay machine-readable.

- Conditional rendering (terminal vs JSON)
- Context variables bound once per command (chromosome, user)
- Structured exception tracebacks in JSON mode
"""

from __future__ import annotations

import logging
import os
import sys
from typing import TYPE_CHECKING, cast

import structlog

if TYPE_CHECKING:
    from structlog.stdlib import BoundLogger
    from structlog.typing import Processor

from ergenome.models import LogLevel


def configure_logging(
    log_level: LogLevel = LogLevel.INFO, json_output: bool | None = None
) -> None:
    """Configure logging system with structured logging.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        json_output: Force JSON output. If None, auto-detects based on
            sys.stderr.isatty() and the ERGENOME_JSON_LOGS environment variable.

    Examples:
        >>> configure_logging()  # Auto-detect environment
        >>> configure_logging(log_level=LogLevel.DEBUG)  # Debug mode
        >>> configure_logging(json_output=True)  # Force JSON output
    """
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, log_level.value.upper()),
        force=True,
    )

    if json_output is None:
        json_output = not sys.stderr.isatty() or os.getenv("ERGENOME_JSON_LOGS") == "true"

    shared_processors: list[Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.ExtraAdder(),
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.StackInfoRenderer(),
    ]

    processors: list[Processor]
    if json_output:
        processors = [
            *shared_processors,
            structlog.processors.dict_tracebacks,
            structlog.processors.JSONRenderer(),
        ]
    else:
        processors = [
            *shared_processors,
            structlog.processors.format_exc_info,
            structlog.dev.ConsoleRenderer(colors=True),
        ]

    structlog.configure(
        processors=processors,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_logger(name: str | None = None) -> BoundLogger:
    """Get a configured structlog logger.

    Args:
        name: Logger name (defaults to calling module name)

    Returns:
        Configured structlog logger

    Examples:
        >>> logger = get_logger(__name__)
        >>> logger.info("index saved", bytes=1024)
    """
    return cast("BoundLogger", structlog.get_logger(name))


def bind_context(**values: object) -> None:
    """Bind values to every log line emitted by the current context.

    Examples:
        >>> bind_context(chromosome="chr20", user="alice")
    """
    structlog.contextvars.bind_contextvars(**values)


def clear_context() -> None:
    """Drop all values bound with :func:`bind_context`."""
    structlog.contextvars.clear_contextvars()
