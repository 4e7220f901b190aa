"""Finite-dimensional measurement processes and their thermodynamic audits."""

__version__ = "0.1.0"
