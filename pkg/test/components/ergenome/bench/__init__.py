"""Tests for bench component."""
