"""Tests for rlz component."""
