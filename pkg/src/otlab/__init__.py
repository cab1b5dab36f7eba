"""Exact planar discrete optimal-transport laboratory."""

__version__ = "0.1.0"
