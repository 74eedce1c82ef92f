import numpy as np
import pytest

from abfsim.potentials import sine_quadratic, v1, v2


@pytest.fixture(scope="session")
def pot_v1():
    return v1()


@pytest.fixture(scope="session")
def pot_v2():
    return v2()


@pytest.fixture(scope="session")
def pot_sine():
    return sine_quadratic(1.0)


def finite_difference_gradient(potential, points, h=1e-5):
    """Central-difference gradient of the periodized energy, one column
    per coordinate. Points must stay away from the period seam by more
    than h so both evaluations fall on the same branch."""
    points = np.asarray(points, dtype=float)
    grad = np.empty_like(points)
    for axis in range(points.shape[-1]):
        lo = points.copy()
        hi = points.copy()
        lo[..., axis] -= h
        hi[..., axis] += h
        grad[..., axis] = (potential.energy(hi) - potential.energy(lo)) / (2 * h)
    return grad


def interior_points(rng, potential, n, margin=0.05, y_range=3.0):
    """Random test points with x1 clear of the seam at +/- L/2."""
    L = potential.period
    pts = np.empty((n, potential.dim))
    pts[:, 0] = rng.uniform(-L / 2 + margin, L / 2 - margin, size=n)
    pts[:, 1:] = rng.uniform(-y_range, y_range, size=(n, potential.dim - 1))
    return pts
