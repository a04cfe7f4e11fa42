"""Exact lab for improved Hodge polygons and T-adic Newton polygons of
two-variable exponential sums over a triangular base."""

__version__ = "0.1.0"
