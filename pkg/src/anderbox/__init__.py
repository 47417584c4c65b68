"""Spectral simulation library for the two-dimensional Anderson
Hamiltonian (Laplacian + white-noise potential) on boxes with Dirichlet
boundary conditions."""

__version__ = "0.1.0"
