"""Admissibility checks and numerical inversion for Laplace transforms."""

__version__ = "0.1.0"
