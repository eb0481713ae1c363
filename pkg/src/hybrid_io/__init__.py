"""Simulation and verification of approximate state transfer through a fixed interface unitary."""

__version__ = "0.1.0"
