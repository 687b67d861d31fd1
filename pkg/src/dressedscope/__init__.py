"""Simulation of dressed-excited-state subwavelength imaging in optical lattices."""

__version__ = "0.1.0"
