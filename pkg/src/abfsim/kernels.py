"""Compactly supported smoothing kernels on the circle.

The building block is the standard bump function

    b(u) = c * exp(-1 / (1 - u^2))   for |u| < 1,   b(u) = 0 otherwise,

with c chosen so that b integrates to one. Rescaling by a bandwidth
epsilon and wrapping distances onto the periodic interval gives the
mollifier used by the conditional-mean estimator,

    psi_eps(x) = b(wrap(x) / eps) / eps,

and the regularized kernel adds a constant floor alpha >= 0:

    phi(x) = alpha + psi_eps(x).

With alpha > 0 every weighted average stays defined even when no sample
falls inside the bandwidth window.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import ConfigurationError
from .potentials import wrap


@lru_cache(maxsize=1)
def bump_normalization():
    """Constant c with  c * integral_{-1}^{1} exp(-1/(1-u^2)) du = 1."""
    integral, err = quad(lambda u: np.exp(-1.0 / (1.0 - u * u)), -1.0, 1.0,
                         epsabs=1e-13, epsrel=1e-13)
    if err > 1e-10:
        raise RuntimeError(f"bump normalization quadrature error {err:g}")
    return 1.0 / integral


def bump(u):
    """Normalized bump function, vanishing outside (-1, 1)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = bump_normalization() * np.exp(-1.0 / (1.0 - ui * ui))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class KernelSpec:
    """Bandwidth, floor, and period of the smoothing kernel.

    ``epsilon`` must fit strictly inside half a period so the window
    never wraps onto itself; ``alpha`` must be nonnegative.
    """

    epsilon: float
    alpha: float = 0.0
    period: float = 4.0

    def __post_init__(self):
        if self.period <= 0:
            raise ConfigurationError(f"kernel period must be positive, got {self.period}")
        if not self.epsilon > 0:
            raise ConfigurationError(f"kernel epsilon must be positive, got {self.epsilon}")
        if self.epsilon >= self.period / 2:
            raise ConfigurationError(
                f"kernel epsilon {self.epsilon} must be smaller than half the "
                f"period {self.period} so the window does not wrap onto itself"
            )
        if self.alpha < 0:
            raise ConfigurationError(f"kernel alpha must be >= 0, got {self.alpha}")


def psi_eps(x, spec):
    """Periodized mollifier b(wrap(x)/eps)/eps for the given spec."""
    return bump(wrap(np.asarray(x, dtype=float), spec.period) / spec.epsilon) / spec.epsilon


def phi(x, spec):
    """Regularized kernel alpha + psi_eps(x)."""
    return spec.alpha + psi_eps(x, spec)
