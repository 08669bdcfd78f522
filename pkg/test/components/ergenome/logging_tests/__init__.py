"""Tests for logging component."""
