"""Numerical laboratory for linear hypoelliptic diffusions dx = A x dt + sigma dB."""

__version__ = "0.1.0"
