"""Fault-tolerant cluster states from periodic 3-d cell complexes.

Subpackages and modules
-----------------------
cell_complex
    Complexes, cluster graphs, stabilizers, duals and syndrome graphs.
lattices
    The cubic, diamond, triamond and doubled-edge cubic lattices.
splitting
    Cell and vertex splits, n-splits, edge subdivision.
noise
    Error models and syndromes.
decoder
    Union-find decoder (compiled core with a pure-Python fallback).
experiments
    Monte Carlo sweeps and threshold estimation.
cli
    The ``ftcs`` command.
"""

__version__ = "0.1.0"
