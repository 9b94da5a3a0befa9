"""Exact and perturbative master equations for a two-level system coupled to bosonic modes."""

__version__ = "0.1.0"
