"""Tests for fm component."""
