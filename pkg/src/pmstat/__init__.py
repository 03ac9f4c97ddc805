"""Probabilistic metric spaces, the Levy metric and ideal-statistical convergence diagnostics."""

__version__ = "0.1.0"
