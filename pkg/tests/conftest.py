"""Shared pytest configuration (oracles live in tests/oracles.py)."""
