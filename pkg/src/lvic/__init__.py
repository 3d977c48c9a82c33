"""Conditional and marginal information criteria for Bayesian latent variable models."""

from .data import ClusteredDataset, from_matrix, read_csv, write_csv

__version__ = "0.1.0"

__all__ = ["ClusteredDataset", "from_matrix", "read_csv", "write_csv", "__version__"]
