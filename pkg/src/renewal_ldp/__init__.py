"""Exact large-deviation tail approximations for renewal reward processes."""

__version__ = "0.1.0"
