"""Logging component public interface."""

from .core import bind_context, clear_context, configure_logging, get_logger

__all__ = ["bind_context", "clear_context", "configure_logging", "get_logger"]
