"""Integration tests package.

Contains end-to-end integration tests that validate complete workflows
across multiple components.
"""
