"""Approximation of smooth functions by finite sums of Gaussians."""

__version__ = "0.1.0"
