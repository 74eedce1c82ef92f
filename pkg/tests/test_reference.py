import numpy as np
import pytest
from scipy.integrate import quad

from abfsim.errors import ConfigurationError, QuadratureError
from abfsim.metrics import grid_l1
from abfsim.potentials import GaussianWellPotential, QuarticTerm
from abfsim.reference import (
    MeanForceProfile,
    free_energy,
    mean_force,
    profile_grid,
    reference_profiles,
    slice_integrals,
)


def test_profile_grid_midpoints():
    g = profile_grid(4.0, 4)
    np.testing.assert_allclose(g, [-1.5, -0.5, 0.5, 1.5])
    assert profile_grid(4.0, 1)[0] == 0.0
    with pytest.raises(ConfigurationError):
        profile_grid(4.0, 0)


def test_profile_container_validation():
    g = profile_grid(4.0, 8)
    with pytest.raises(ConfigurationError):
        MeanForceProfile(g, np.zeros(7), 4.0)
    with pytest.raises(ConfigurationError):
        MeanForceProfile(g, np.zeros(8), 4.0, missing=np.zeros(7, dtype=bool))
    prof = MeanForceProfile(g, np.zeros(8), 4.0,
                            missing=np.arange(8) % 3 == 0)
    assert prof.n_missing == 3
    assert mean_force(Vq(), 1.0, m=8).n_missing == 0


def Vq():
    """x1-quartic plus y-quartic: the slices decouple exactly."""
    return GaussianWellPotential(
        gaussians=(),
        quartics=(QuarticTerm(0, 0.2), QuarticTerm(1, 0.2)),
        dim=2,
        period=4.0,
    )


def test_slice_integrals_match_adaptive_quadrature(pot_v1):
    """Gauss-Legendre slice integrals agree with scipy's adaptive quad."""
    beta, z0 = 10.0, 0.3
    num, den = slice_integrals(z0, pot_v1, beta)
    assert isinstance(num, float) and isinstance(den, float)

    def weight(y):
        return np.exp(-beta * pot_v1.energy(np.array([z0, y])))

    den_q, _ = quad(weight, -6, 6, limit=200, epsabs=0, epsrel=1e-12)
    num_q, _ = quad(
        lambda y: pot_v1.gradient(np.array([z0, y]))[0] * weight(y),
        -6, 6, limit=200, epsabs=0, epsrel=1e-12,
    )
    assert den == pytest.approx(den_q, rel=1e-10)
    assert num == pytest.approx(num_q, rel=1e-10)


def test_mean_force_is_slice_ratio(pot_v1):
    prof = mean_force(pot_v1, 10.0, m=24)
    num, den = slice_integrals(prof.grid, pot_v1, 10.0)
    np.testing.assert_allclose(prof.values, num / den, rtol=1e-12)


def test_mean_force_is_free_energy_derivative(pot_v1):
    """Central difference of A = -(1/beta) log(den) reproduces the
    conditional-average form of A' to O(h^2)."""
    beta, h = 10.0, 1e-4
    grid = profile_grid(pot_v1.period, 17)
    force = mean_force(pot_v1, beta, m=17).values
    for z, f in zip(grid, force):
        if min(abs(z - 2.0), abs(z + 2.0)) < 2 * h:
            continue  # the derivative jumps at the seam
        _, dp = slice_integrals(z + h, pot_v1, beta)
        _, dm = slice_integrals(z - h, pot_v1, beta)
        diff = (np.log(dm) - np.log(dp)) / (beta * 2 * h)
        assert diff == pytest.approx(f, abs=1e-6)


def test_free_energy_minimum_is_zero(pot_v1):
    prof = free_energy(pot_v1, 10.0, m=100)
    assert prof.values.min() == 0.0
    assert prof.values.max() > 1.0


def test_mean_force_odd_for_symmetric_potential(pot_v1):
    prof = mean_force(pot_v1, 10.0, m=80)
    np.testing.assert_allclose(prof.values, -prof.values[::-1], atol=1e-11)


def test_mean_force_circulates_to_zero(pot_v1):
    """A' is the derivative of a periodic function, so its midpoint sum
    over one period vanishes."""
    prof = mean_force(pot_v1, 10.0, m=8192)
    circulation = (pot_v1.period / 8192) * prof.values.sum()
    assert abs(circulation) <= 1e-10


def test_v1_mean_force_norm_frozen(pot_v1):
    """Pinned |A'|_L1 values for the double-well landscape at beta=10."""
    for m, frozen in ((400, 17.009707625230423), (8192, 17.009457436834822)):
        prof = mean_force(pot_v1, 10.0, m=m)
        l1 = grid_l1(prof.values, np.zeros(m), pot_v1.period)
        assert l1 == pytest.approx(frozen, abs=1e-9)


def test_separable_potential_exact_profiles():
    """With V = 0.2 x^4 + 0.2 y^4 the y-integral cancels in the ratio:
    A'(z) = 0.8 z^3 and A(z) = 0.2 z^4 up to the reported shift."""
    pot = Vq()
    a, force = reference_profiles(pot, 1.0, m=64)
    np.testing.assert_allclose(force.values, 0.8 * force.grid**3, atol=1e-12)
    quartic = 0.2 * a.grid**4
    np.testing.assert_allclose(a.values, quartic - quartic.min(), atol=1e-12)


def test_sine_quadratic_mean_force_vanishes(pot_sine):
    """V = (y - sin(2 pi x))^2 / 2: every slice is the same shifted
    Gaussian, so the free energy is flat."""
    prof = mean_force(pot_sine, 1.0, m=64, y_max=12.0)
    assert np.max(np.abs(prof.values)) <= 1e-10


def test_tail_check_raises(pot_sine):
    """At beta=1 the transverse Gaussian has unit width; y_max=6 leaves
    mass of order e^{-12.5} > 1e-12 at the edge next to sin = 1."""
    with pytest.raises(QuadratureError, match="increase y_max"):
        mean_force(pot_sine, 1.0, m=16, y_max=6.0)


def test_reference_profiles_match_individual_calls(pot_v2):
    a, force = reference_profiles(pot_v2, 10.0, m=40)
    np.testing.assert_array_equal(a.values, free_energy(pot_v2, 10.0, m=40).values)
    np.testing.assert_array_equal(
        force.values, mean_force(pot_v2, 10.0, m=40).values
    )
    assert a.kind == force.kind == "exact"


def test_quadrature_argument_validation(pot_v1, pot_sine):
    with pytest.raises(ConfigurationError):
        slice_integrals(0.0, pot_v1, beta=0.0)
    with pytest.raises(ConfigurationError):
        slice_integrals(0.0, pot_v1, 10.0, y_max=-1.0)
    with pytest.raises(ConfigurationError):
        slice_integrals(0.0, pot_v1, 10.0, n_quad=1)

    class OneD:
        dim = 1
        period = 4.0
        name = "line"

    with pytest.raises(ConfigurationError):
        slice_integrals(0.0, OneD(), 10.0)
