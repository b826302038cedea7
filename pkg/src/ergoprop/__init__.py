"""Random time-inhomogeneous Markovian quantum dynamics in stationary
environments: projective-metric contraction, Perron-Frobenius limits,
Lyapunov-type rates, and mixing-driven decay estimators."""

__version__ = "0.1.0"

from ._kernels import BACKEND

__all__ = ["BACKEND", "__version__"]
