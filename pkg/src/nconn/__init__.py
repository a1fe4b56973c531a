"""Symbolic and numeric toolkit for metric-affine geometry on split manifolds."""

__version__ = "0.1.0"
