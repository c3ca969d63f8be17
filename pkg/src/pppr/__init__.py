"""Gradient recovery on triangulated surfaces with linear surface finite elements."""

__version__ = "0.1.0"
