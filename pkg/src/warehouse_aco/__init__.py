"""Congestion-aware warehouse routing with ant colony optimization."""

__version__ = "1.0.0"
