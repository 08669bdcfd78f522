"""Tests for CLI base."""
