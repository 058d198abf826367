"""Periodic orbits in prescribed homotopy classes and relative capacities on surfaces."""

__version__ = "0.1.0"
