"""Numerical laboratory for the Weil explicit formula on finite product tori."""

__version__ = "0.1.0"
