"""Weighted heat kernels on model spaces and numerical checks of their bounds."""

__version__ = "0.1.0"
