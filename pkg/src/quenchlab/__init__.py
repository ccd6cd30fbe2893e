"""Finite-difference experiments on boundary quenching in a non-Newtonian filtration equation."""

__version__ = "0.1.0"
