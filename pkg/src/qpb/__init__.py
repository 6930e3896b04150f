"""Exact symbolic verification of differential calculi on quantum principal bundles."""

__version__ = "0.1.0"
