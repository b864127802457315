"""Hate-speech and offensive-content classification toolkit."""

__version__ = "0.1.0"
