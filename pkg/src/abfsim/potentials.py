"""Potential energy surfaces, periodized in the first coordinate.

Every potential here is built from a closed-form expression V(x) on R^d
and made periodic in x1 by evaluating at the wrapped point:

    V_per(x1, x2, ...) = V(wrap(x1), x2, ...),
    wrap(x1) = x1 - L * floor(x1 / L + 1/2)   in  [-L/2, L/2).

The wrap may leave a gradient discontinuity across the seam at
x1 = +/- L/2; that is a property of the model, not an artifact, and the
PDE solver treats the seam faces one-sidedly for exactly this reason.

Two families are provided:

* :class:`GaussianWellPotential` -- sums of isotropic Gaussian bumps plus
  per-axis quartic confinements,

      V(x) = sum_k a_k exp(-|x - c_k|^2 / w_k^2)
           + sum_q b_q (x_{axis_q} - m_q)^4,

  which covers the double-well and entropic-barrier landscapes used in
  the bundled experiments.
* :class:`SineQuadraticPotential` -- V(x, y) = (y - sin(2 pi x / L))^2 / 2,
  whose conditional free energy along x1 is exactly flat.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


def wrap(x, period):
    """Map positions to the fundamental interval [-period/2, period/2).

    Works elementwise on arrays. ``period`` must be positive.
    """
    if period <= 0:
        raise ConfigurationError(f"period must be positive, got {period}")
    return x - period * np.floor(x / period + 0.5)


@dataclass(frozen=True)
class GaussianTerm:
    """One isotropic Gaussian bump a * exp(-|x - c|^2 / w^2)."""

    amplitude: float
    center: tuple[float, ...]
    width: float = 1.0

    def __post_init__(self):
        if self.width <= 0:
            raise ConfigurationError(
                f"Gaussian width must be positive, got {self.width}"
            )
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


@dataclass(frozen=True)
class QuarticTerm:
    """One quartic confinement b * (x_axis - m)^4 along a single axis."""

    axis: int
    coeff: float
    center: float = 0.0

    def __post_init__(self):
        if self.axis < 0:
            raise ConfigurationError(f"quartic axis must be >= 0, got {self.axis}")


class Potential:
    """Interface shared by all potentials.

    Attributes
    ----------
    dim : int
        Number of coordinates.
    period : float
        Period of the first coordinate.
    name : str
    """

    dim: int
    period: float
    name: str

    def energy(self, x):
        raise NotImplementedError

    def gradient(self, x, *, wrap_first=True):
        raise NotImplementedError

    def _check_points(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ConfigurationError(
                f"potential '{self.name}' expects points with {self.dim} "
                f"coordinates, got shape {x.shape}"
            )
        return x


class GaussianWellPotential(Potential):
    """Sum of Gaussian bumps and per-axis quartics, periodic in x1."""

    def __init__(self, gaussians, quartics, dim=2, period=4.0, name="custom"):
        if dim < 2:
            raise ConfigurationError(f"dim must be >= 2, got {dim}")
        if period <= 0:
            raise ConfigurationError(f"period must be positive, got {period}")
        self.gaussians = tuple(
            g if isinstance(g, GaussianTerm) else GaussianTerm(*g) for g in gaussians
        )
        self.quartics = tuple(
            q if isinstance(q, QuarticTerm) else QuarticTerm(*q) for q in quartics
        )
        for g in self.gaussians:
            if len(g.center) != dim:
                raise ConfigurationError(
                    f"Gaussian center {g.center} has {len(g.center)} coordinates, "
                    f"expected {dim}"
                )
        for q in self.quartics:
            if q.axis >= dim:
                raise ConfigurationError(
                    f"quartic axis {q.axis} out of range for dim={dim}"
                )
        self.dim = dim
        self.period = float(period)
        self.name = name
        # Stacked term parameters so energy/gradient stay vectorized.
        self._amps = np.array([g.amplitude for g in self.gaussians])
        self._centers = np.array([g.center for g in self.gaussians]).reshape(
            len(self.gaussians), dim
        )
        self._inv_w2 = np.array([1.0 / g.width**2 for g in self.gaussians])

    def _wrapped(self, x, wrap_first):
        x = self._check_points(x)
        if not wrap_first:
            return x
        xw = x.copy()
        xw[..., 0] = wrap(xw[..., 0], self.period)
        return xw

    def energy(self, x):
        xw = self._wrapped(x, True)
        out = np.zeros(xw.shape[:-1])
        if self.gaussians:
            # (..., k) squared distances to each Gaussian center
            d2 = ((xw[..., None, :] - self._centers) ** 2).sum(axis=-1)
            out = out + (self._amps * np.exp(-d2 * self._inv_w2)).sum(axis=-1)
        for q in self.quartics:
            out = out + q.coeff * (xw[..., q.axis] - q.center) ** 4
        return out

    def gradient(self, x, *, wrap_first=True):
        """Gradient of the periodized energy.

        ``wrap_first=False`` evaluates the closed form at the raw point,
        which is what one-sided limits at the seam need.
        """
        xw = self._wrapped(x, wrap_first)
        grad = np.zeros_like(xw)
        if self.gaussians:
            diff = xw[..., None, :] - self._centers  # (..., k, d)
            d2 = (diff**2).sum(axis=-1)
            weight = self._amps * np.exp(-d2 * self._inv_w2) * self._inv_w2
            grad += -2.0 * (weight[..., None] * diff).sum(axis=-2)
        for q in self.quartics:
            grad[..., q.axis] += 4.0 * q.coeff * (xw[..., q.axis] - q.center) ** 3
        return grad


class SineQuadraticPotential(Potential):
    """V(x, y) = (y - sin(2 pi x / L))^2 / 2.

    The conditional distribution of y given x1 = z is a unit-variance
    Gaussian centered at sin(2 pi z / L) for every z, so the free energy
    along x1 is constant and its derivative vanishes identically. Useful
    as a null landscape for estimator checks.
    """

    dim = 2

    def __init__(self, period=1.0):
        if period <= 0:
            raise ConfigurationError(f"period must be positive, got {period}")
        self.period = float(period)
        self.name = "sine_quadratic"

    def _parts(self, x, wrap_first):
        x = self._check_points(x)
        x1 = x[..., 0]
        if wrap_first:
            x1 = wrap(x1, self.period)
        omega = 2.0 * np.pi / self.period
        s = np.sin(omega * x1)
        return x1, x[..., 1], omega, s

    def energy(self, x):
        _, y, _, s = self._parts(x, True)
        return 0.5 * (y - s) ** 2

    def gradient(self, x, *, wrap_first=True):
        x1, y, omega, s = self._parts(x, wrap_first)
        resid = y - s
        grad = np.empty(np.broadcast(x1, y).shape + (2,))
        grad[..., 0] = -omega * np.cos(omega * x1) * resid
        grad[..., 1] = resid
        return grad


def v1():
    """Double well along x1 with an energetic barrier at the origin."""
    return GaussianWellPotential(
        gaussians=[
            GaussianTerm(5.0, (0.0, 0.0)),
            GaussianTerm(-5.0, (1.0, 0.0)),
            GaussianTerm(-5.0, (-1.0, 0.0)),
        ],
        quartics=[QuarticTerm(0, 0.2), QuarticTerm(1, 0.2)],
        dim=2,
        period=4.0,
        name="v1",
    )


def v2():
    """Double well along x1 where the barrier region is reached by a
    detour in x2 (entropic bottleneck at y ~ 1)."""
    third = 1.0 / 3.0
    return GaussianWellPotential(
        gaussians=[
            GaussianTerm(3.0, (0.0, third)),
            GaussianTerm(-3.0, (0.0, 5.0 * third)),
            GaussianTerm(-5.0, (1.0, 0.0)),
            GaussianTerm(-5.0, (-1.0, 0.0)),
        ],
        quartics=[QuarticTerm(0, 0.2), QuarticTerm(1, 0.2, center=third)],
        dim=2,
        period=4.0,
        name="v2",
    )


def sine_quadratic(period=1.0):
    return SineQuadraticPotential(period=period)


POTENTIALS = {
    "v1": v1,
    "v2": v2,
    "sine_quadratic": sine_quadratic,
}


def make_potential(name, **kwargs):
    """Instantiate a registered potential by name.

    ``custom`` builds a :class:`GaussianWellPotential` and accepts the
    keyword arguments ``gaussians``, ``quartics``, ``dim``, ``period``.
    """
    if name == "custom":
        try:
            return GaussianWellPotential(
                gaussians=kwargs.pop("gaussians", ()),
                quartics=kwargs.pop("quartics", ()),
                **kwargs,
            )
        except TypeError as exc:
            raise ConfigurationError(f"bad custom potential: {exc}") from exc
    try:
        factory = POTENTIALS[name]
    except KeyError:
        known = ", ".join(sorted(POTENTIALS) + ["custom"])
        raise ConfigurationError(
            f"unknown potential '{name}' (known: {known})"
        ) from None
    try:
        return factory(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"bad arguments for potential '{name}': {exc}") from exc
