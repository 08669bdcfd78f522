"""Tests for config component."""
