"""Tests for validation component."""
