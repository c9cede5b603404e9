"""Ising order versus O(n) correlation decay on hyperbolic graphs."""
__version__ = "0.1.0"
