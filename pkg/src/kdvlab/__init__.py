"""Numerical toolkit for dispersive-dissipative KdV-type equations."""

__version__ = "0.1.0"
