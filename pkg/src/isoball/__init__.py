"""Numerical laboratory for holomorphic isometries from the disk into products of balls."""

from .errors import Rejection

__version__ = "0.1.0"

__all__ = ["Rejection", "__version__"]
