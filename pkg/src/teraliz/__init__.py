"""Generalize example-based MiniLang unit tests into property-based tests."""

__version__ = "0.1.0"
