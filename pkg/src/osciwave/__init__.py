"""Numerical verification toolkit for wave equations with oscillating time-dependent damping."""

__version__ = "0.1.0"
