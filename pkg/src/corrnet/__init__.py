"""Correlation-filtered networks of multivariate yield series."""

__version__ = "0.1.0"
