"""Resource-rational perspective-taking in reference games.

Exact-enumeration speaker/listener models with probabilistic perspective
weights, optimal-weight sweeps, round-by-round adaptation, and Bayesian
inference over production data.
"""
from ._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
