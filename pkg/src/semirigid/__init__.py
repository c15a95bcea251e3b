"""Numerical laboratory for barycenters, symmetric spaces and boundary actions."""

__version__ = "0.1.0"
