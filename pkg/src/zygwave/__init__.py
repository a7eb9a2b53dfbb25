"""Paradifferential calculus with a large parameter on the torus, plus a spectral wave solver."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
