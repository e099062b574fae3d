"""Solver for linear integer arithmetic over symbolic relational data."""

__version__ = "0.1.0"
