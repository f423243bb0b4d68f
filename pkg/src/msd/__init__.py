"""Medial skeletal diagram toolkit."""

__version__ = "0.1.0"
