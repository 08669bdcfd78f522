"""Models component for ergenome.

Exports shared data models and enumerations.
"""

from ergenome.models.core import LogLevel, Occurrence, TreeKind

__all__ = [
    "LogLevel",
    "Occurrence",
    "TreeKind",
]
