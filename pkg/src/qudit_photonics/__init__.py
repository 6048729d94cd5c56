"""Simulation and verification of polarization/spatial-mode photonic qudit gates."""

__version__ = "0.1.0"
