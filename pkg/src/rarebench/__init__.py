"""Rare-event committer-probability benchmark for stochastic chemical processes."""

__version__ = "0.1.0"
