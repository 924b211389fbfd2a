"""Maximal operators of Fourier multipliers: exact counterexamples, grid engine, decompositions."""

__version__ = "0.1.0"
