"""Multilingual visually grounded sentence ranking."""

__version__ = "0.1.0"
