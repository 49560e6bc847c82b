"""Ensemble causal discovery and heterogeneous effect estimation for binary event data."""

__version__ = "0.1.0"
