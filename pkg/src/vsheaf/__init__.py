"""Exact computations with virtual structure sheaves on Kuranishi-type charts."""

__version__ = "0.1.0"
