"""Eigenvalue bounds and a gauge-invariant eigensolver for the planar
magnetic Laplacian with Dirichlet or Neumann boundary conditions."""

from . import bounds, fields, geometry, harness, local_bound, spectral

__all__ = ["bounds", "fields", "geometry", "harness", "local_bound", "spectral"]
__version__ = "0.1.0"
