"""Deterministic look-compute-move robot simulator."""

__version__ = "0.1.0"
