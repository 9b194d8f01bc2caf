"""Entanglement generation (purity decay) in bipartite bosonic systems with
integrable uncoupled dynamics: exact sparse quantum evolution alongside the
semiclassical determinant prediction."""

__version__ = "0.1.0"
