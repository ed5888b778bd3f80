"""Numerical laboratory for mixed classical/quantum dynamics of the kicked rotator."""

__version__ = "0.1.0"
