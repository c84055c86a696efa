"""Heisenberg group geometry and inequality checks."""

__version__ = "0.1.0"
