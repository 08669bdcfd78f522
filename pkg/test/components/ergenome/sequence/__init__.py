"""Tests for sequence component."""
