"""Numerical laboratory for the CR Yamabe problem on the Heisenberg group."""

__version__ = "0.1.0"
