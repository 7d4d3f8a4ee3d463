"""Scaling limits of controlled branching processes: construction, simulation, verification."""

__version__ = "0.1.0"
