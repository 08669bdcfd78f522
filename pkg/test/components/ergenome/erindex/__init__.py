"""Tests for erindex component."""
