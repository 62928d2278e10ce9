"""Gaussian Landau-level fields: sampling, zeros, Kac-Rice correlations, averages."""

__version__ = "0.1.0"
