"""Numerical toolkit for weighted interpolation inequalities."""

__version__ = "1.0.0"
