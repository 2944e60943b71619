"""Numerical laboratory for the grand canonical Phi^3 measure on the torus."""
__version__ = "0.1.0"
