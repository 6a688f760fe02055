"""Dirichlet eigenvalues of the p-Laplacian on the unit disk and its relatives."""

__version__ = "0.1.0"
