"""Error measures and summary statistics used by the experiments."""

from __future__ import annotations

import numpy as np

from .errors import UsageError
from .potentials import wrap
from .reference import profile_grid


def _as_1d(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise UsageError(f"{name} must be a nonempty 1d array")
    return a


def grid_l1(a, b, period):
    """Riemann L1 distance (period / m) * sum |a - b| of two profiles
    sampled on the same uniform grid over one period."""
    a = _as_1d(a, "a")
    b = _as_1d(b, "b")
    if a.shape != b.shape:
        raise UsageError(f"shape mismatch {a.shape} vs {b.shape}")
    if period <= 0:
        raise UsageError(f"period must be positive, got {period}")
    return float(np.abs(a - b).sum() * period / a.size)


def loglog_slope(x, y):
    """Least-squares slope of log y against log x."""
    x = _as_1d(x, "x")
    y = _as_1d(y, "y")
    if x.shape != y.shape or x.size < 2:
        raise UsageError("need two same-length arrays with at least 2 points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise UsageError("log-log slope needs strictly positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def well_crossing_fraction(start_x1, end_x1):
    """Fraction of particles whose first coordinate changed sign."""
    start = _as_1d(start_x1, "start_x1")
    end = _as_1d(end_x1, "end_x1")
    if start.shape != end.shape:
        raise UsageError(f"shape mismatch {start.shape} vs {end.shape}")
    return float(np.mean((start < 0) != (end < 0)))


def well_populations(x1):
    """(fraction with x1 < 0, fraction with x1 >= 0)."""
    x1 = _as_1d(x1, "x1")
    left = float(np.mean(x1 < 0))
    return left, 1.0 - left


def marginal_histogram(x1, period, m):
    """Particle x1-marginal as a density histogram on the midpoint grid."""
    x1 = _as_1d(x1, "x1")
    if m < 1:
        raise UsageError(f"m must be >= 1, got {m}")
    edges = np.linspace(-period / 2, period / 2, m + 1)
    hist, _ = np.histogram(wrap(x1, period), bins=edges, density=True)
    return profile_grid(period, m), hist


def binned_conditional_mean(x1, values, period, m):
    """Mean of ``values`` over m uniform x1 bins.

    Returns (grid, means, counts); empty bins give NaN means.
    """
    x1 = _as_1d(x1, "x1")
    values = _as_1d(values, "values")
    if x1.shape != values.shape:
        raise UsageError(f"shape mismatch {x1.shape} vs {values.shape}")
    if m < 1:
        raise UsageError(f"m must be >= 1, got {m}")
    xw = wrap(x1, period)
    idx = np.clip(((xw + period / 2) / period * m).astype(int), 0, m - 1)
    sums = np.bincount(idx, weights=values, minlength=m)
    counts = np.bincount(idx, minlength=m)
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return profile_grid(period, m), means, counts


def integrate_profile(force, period):
    """Periodic antiderivative of a mean-force profile, shifted to min 0.

    Spectral integration on the uniform grid: divide the nonzero Fourier
    modes by (i 2 pi k / L) and drop the mean (a periodic antiderivative
    requires zero-mean input; any residual mean in a noisy estimate is
    discarded).  The Nyquist mode of even-length grids is dropped too --
    it carries no usable phase information.
    """
    force = _as_1d(force, "force")
    if period <= 0:
        raise UsageError(f"period must be positive, got {period}")
    if not np.all(np.isfinite(force)):
        raise UsageError("force values must be finite")
    m = force.size
    coef = np.fft.rfft(force)
    k = np.arange(coef.size)
    coef[0] = 0.0
    if m % 2 == 0:
        coef[-1] = 0.0
    coef[1:] = coef[1:] / (2j * np.pi * k[1:] / period)
    prof = np.fft.irfft(coef, n=m)
    return prof - prof.min()


def fourier_amplitude(values, k=1):
    """Amplitude of the k-th harmonic of values sampled uniformly over
    one period: a sin(2 pi k x / L + phase) gives back a."""
    values = _as_1d(values, "values")
    if not np.all(np.isfinite(values)):
        raise UsageError("values must be finite")
    if not 1 <= k <= (values.size - 1) // 2:
        raise UsageError(f"harmonic k={k} not resolved by {values.size} samples")
    return float(2.0 * np.abs(np.fft.rfft(values)[k]) / values.size)
