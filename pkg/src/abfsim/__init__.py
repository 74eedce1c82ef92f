"""Adaptive biasing force simulations with interacting-particle
mean-force estimation, exact quadrature references, and grid solvers."""

__version__ = "0.1.0"
