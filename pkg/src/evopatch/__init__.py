"""Evolutionary multi-edit program repair over infill-generated candidates."""

__version__ = "0.1.0"
