"""Tests for crypto component."""
