"""Tests for models component."""
