"""Tests for ebtree component."""
