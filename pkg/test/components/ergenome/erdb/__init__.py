"""Tests for erdb component."""
