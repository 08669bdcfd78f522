"""Tests for codec component."""
