"""Numerics for div(x_n^a grad u) = 0 on the upper half space."""

__version__ = "0.1.0"
