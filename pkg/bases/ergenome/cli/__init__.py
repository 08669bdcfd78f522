"""CLI base public interface."""

from .core import build_parser, main

__all__ = ["build_parser", "main"]
