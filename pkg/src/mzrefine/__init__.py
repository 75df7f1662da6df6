"""Pseudospectral Burgers / critical NLS solver with t-model closures and
flux-triggered spectral refinement."""

__version__ = "0.1.0"
