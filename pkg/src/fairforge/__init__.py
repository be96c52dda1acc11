"""Causal fairness prior, in-context transformer and benchmark harness."""

__version__ = "0.1.0"
