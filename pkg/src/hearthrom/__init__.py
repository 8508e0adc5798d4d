"""Axisymmetric thermo-mechanical FEM solver with POD-based model reduction."""

__version__ = "0.1.0"
