"""Tests for models.core module.

Validates the shared enums and the frozen, strict Occurrence model.
"""

from typing import Any

import pytest
from pydantic import ValidationError

from ergenome.models import LogLevel, Occurrence, TreeKind


def _occurrence(**overrides: Any) -> Occurrence:
    values: dict[str, Any] = {
        "individual_id": "ind1",
        "fact_ind": 3,
        "fact_off": 2,
        "ending_fact_ind": 4,
        "ending_fact_off": 0,
    }
    values.update(overrides)
    return Occurrence(**values)


# LogLevel tests
def test_log_level_all_exist() -> None:
    """Test that all log levels are defined."""
    assert [level.value for level in LogLevel] == ["debug", "info", "warning", "error", "critical"]


def test_log_level_str_conversion() -> None:
    """Test StrEnum automatic string conversion."""
    assert str(LogLevel.DEBUG) == "debug"
    assert LogLevel("warning") is LogLevel.WARNING


# TreeKind tests
def test_tree_kinds_have_disjoint_nonce_ranges() -> None:
    """Test base nonces are ten million apart so node nonces never collide."""
    bases = sorted(kind.base_nonce for kind in TreeKind)

    assert bases == [10_000_000, 20_000_000, 30_000_000]
    assert TreeKind.REVERSE.base_nonce == 10_000_000
    assert TreeKind.POSITION.base_nonce == 30_000_000


def test_tree_kind_values() -> None:
    """Test tree kinds serialize to their names."""
    assert {str(kind) for kind in TreeKind} == {"reverse", "forward", "position"}


# Occurrence tests
class TestOccurrence:
    """Tests for the Occurrence model."""

    def test_defaults_text_position_to_unresolved(self) -> None:
        """Test text_position is -1 until the search resolves it."""
        assert _occurrence().text_position == -1

    def test_is_frozen(self) -> None:
        """Test occurrences cannot be mutated."""
        occ = _occurrence()
        with pytest.raises(ValidationError):
            occ.fact_ind = 9  # type: ignore[misc]

    def test_model_copy_resolves_position(self) -> None:
        """Test a resolved copy keeps the factor coordinates."""
        occ = _occurrence().model_copy(update={"text_position": 120})

        assert occ.text_position == 120
        assert occ.fact_ind == 3

    @pytest.mark.parametrize(
        "overrides",
        [
            {"individual_id": ""},
            {"fact_ind": -1},
            {"fact_off": -2},
            {"text_position": -2},
            {"fact_ind": "3"},
        ],
    )
    def test_rejects_invalid_fields(self, overrides: dict[str, Any]) -> None:
        """Test negative coordinates, empty ids and coerced strings are rejected."""
        with pytest.raises(ValidationError):
            _occurrence(**overrides)

    def test_equality_and_hash(self) -> None:
        """Test equal occurrences compare and hash equal."""
        assert _occurrence() == _occurrence()
        assert len({_occurrence(), _occurrence()}) == 1
