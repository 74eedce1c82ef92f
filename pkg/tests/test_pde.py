import numpy as np
import pytest

from abfsim.dynamics import InitialCondition
from abfsim.errors import (
    ConfigurationError,
    SingularDensityError,
    StabilityError,
)
from abfsim.kernels import KernelSpec
from abfsim.metrics import fourier_amplitude, grid_l1
from abfsim.pde import (
    GridDensity,
    density_from_init,
    fp_solve,
    fp_step,
    heat_solve,
    regularized_force,
    stable_dt,
    stationary_density,
)
from abfsim.potentials import GaussianWellPotential, QuarticTerm, wrap
from abfsim.reference import free_energy, mean_force


def y_confined():
    """Potential with no x1 dependence: 0.2 y^4 only."""
    return GaussianWellPotential(
        gaussians=(), quartics=(QuarticTerm(1, 0.2),), dim=2, period=4.0
    )


def test_grid_density_geometry():
    vals = np.full((8, 4), 0.25)
    rho = GridDensity(vals, period=4.0, y_max=2.0)
    assert rho.m1 == 8 and rho.m2 == 4
    assert rho.h1 == 0.5 and rho.h2 == 1.0
    np.testing.assert_allclose(rho.x1_nodes(), -2 + (np.arange(8) + 0.5) * 0.5)
    np.testing.assert_allclose(rho.x2_nodes(), [-1.5, -0.5, 0.5, 1.5])
    assert rho.mass() == pytest.approx(4.0 * 4.0 * 0.25, rel=1e-14)
    np.testing.assert_allclose(rho.x1_marginal(), 1.0)


def test_grid_density_validation():
    with pytest.raises(ConfigurationError):
        GridDensity(np.ones(8), 4.0, 2.0)
    with pytest.raises(ConfigurationError):
        GridDensity(np.ones((4, 4)) - 2.0, 4.0, 2.0)
    with pytest.raises(ConfigurationError):
        GridDensity(np.ones((4, 4)), 0.0, 2.0)
    with pytest.raises(ConfigurationError):
        GridDensity(np.ones((4, 4)), 4.0, -1.0)


@pytest.mark.parametrize("kind", ["gaussian", "uniform_x1", "cosine_x1"])
def test_density_from_init_unit_mass(kind):
    init = InitialCondition(kind=kind, center=(-1.0, 0.0), sigma=0.4)
    rho = density_from_init(init, period=4.0, y_max=3.0, m1=40, m2=30)
    assert rho.mass() == pytest.approx(1.0, rel=1e-12)
    assert rho.values.min() >= 0.0


def test_density_from_init_needs_width():
    init = InitialCondition(kind="gaussian", sigma=0.0)
    with pytest.raises(ConfigurationError):
        density_from_init(init, 4.0, 3.0, 16, 16)


def test_density_from_init_cosine_marginal():
    init = InitialCondition(kind="cosine_x1", center=(0.0, 0.0), sigma=0.5)
    rho = density_from_init(init, period=4.0, y_max=3.0, m1=64, m2=48)
    marginal = rho.x1_marginal()
    # marginal = (1 + cos(2 pi x / L)) / L exactly on the grid modes
    assert fourier_amplitude(marginal, 1) == pytest.approx(0.25, rel=1e-10)
    assert marginal.mean() == pytest.approx(0.25, rel=1e-12)


def test_stationary_density_biased_marginal_is_uniform(pot_v1):
    """Removing A(x1) from the Gibbs exponent flattens the x1 marginal;
    the midpoint y-sum reproduces the quadrature A to near machine."""
    rho = stationary_density(pot_v1, beta=10.0, m1=128, m2=256, y_max=4.0)
    marginal = rho.x1_marginal()
    dev = np.max(np.abs(marginal / marginal.mean() - 1.0))
    assert dev <= 1e-8
    assert rho.mass() == pytest.approx(1.0, rel=1e-12)


def test_stationary_density_unbiased_marginal_follows_free_energy(pot_v1):
    rho = stationary_density(pot_v1, beta=10.0, m1=96, m2=192, y_max=4.0,
                             biased=False)
    a = free_energy(pot_v1, 10.0, m=96)
    weighted = rho.x1_marginal() * np.exp(10.0 * a.values)
    dev = np.max(np.abs(weighted / weighted.mean() - 1.0))
    assert dev <= 1e-8


def test_heat_solve_damps_modes_exactly():
    m, L, beta, t = 64, 4.0, 2.0, 0.3
    x = -L / 2 + (np.arange(m) + 0.5) * L / m
    theta = 2 * np.pi * x / L
    marginal = 1.0 + 0.5 * np.cos(theta) + 0.2 * np.sin(2 * theta)
    out = heat_solve(marginal, L, beta, t)
    d1 = np.exp(-((2 * np.pi / L) ** 2) * t / beta)
    d2 = np.exp(-((4 * np.pi / L) ** 2) * t / beta)
    expected = 1.0 + 0.5 * d1 * np.cos(theta) + 0.2 * d2 * np.sin(2 * theta)
    np.testing.assert_allclose(out, expected, atol=1e-14)
    with pytest.raises(ConfigurationError):
        heat_solve(marginal, L, beta, -0.1)


def test_explicit_step_stability_gate(pot_v1):
    init = InitialCondition(kind="gaussian", center=(-1.0, 0.0), sigma=0.5)
    rho = density_from_init(init, 4.0, 3.0, 32, 24)
    bound = stable_dt(rho, pot_v1, beta=10.0)
    with pytest.raises(StabilityError) as err:
        fp_step(rho, pot_v1, 10.0, dt=1.01 * bound)
    assert err.value.dt_max == pytest.approx(bound)
    out = fp_step(rho, pot_v1, 10.0, dt=0.9 * bound)
    assert out.time == pytest.approx(0.9 * bound)
    assert out.mass() == pytest.approx(1.0, rel=1e-12)
    assert out.values.min() >= -1e-15


def test_fp_solve_biased_conserves_mass(pot_v1):
    init = InitialCondition(kind="gaussian", center=(-1.0, 0.0), sigma=0.5)
    rho = density_from_init(init, 4.0, 3.0, 48, 32)
    kernel = KernelSpec(epsilon=0.5, alpha=0.1, period=4.0)
    final, _ = fp_solve(rho, pot_v1, 10.0, t_final=0.05, kernel=kernel)
    assert final.time == pytest.approx(0.05)
    assert final.mass() == pytest.approx(1.0, rel=1e-12)
    assert final.values.min() >= -1e-15


def test_fp_solve_matches_heat_kernel_without_x1_forces():
    """When V has no x1 dependence and no bias acts, the x1 marginal
    solves the plain heat equation; the upwind scheme tracks the
    spectral solution to first order in the grid spacing."""
    pot = y_confined()
    init = InitialCondition(kind="cosine_x1", center=(0.0, 0.0), sigma=0.5)
    rho = density_from_init(init, pot.period, 3.0, 64, 48)
    start = rho.x1_marginal()
    t = 0.25
    final, _ = fp_solve(rho, pot, beta=1.0, t_final=t)
    expected = heat_solve(start, pot.period, 1.0, t)
    assert grid_l1(final.x1_marginal(), expected, pot.period) <= 1e-3
    assert abs(final.mass() - 1.0) <= 1e-12


def test_fp_solve_snapshot_semantics(pot_v1):
    init = InitialCondition(kind="gaussian", center=(-1.0, 0.0), sigma=0.5)
    rho = density_from_init(init, 4.0, 3.0, 24, 16)
    final, snaps = fp_solve(rho, pot_v1, 10.0, t_final=0.03,
                            snapshot_times=(0.01, 0.02))
    assert [s.time for s in snaps] == [0.01, 0.02]
    assert final.time == pytest.approx(0.03)
    for s in snaps:
        assert s.mass() == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ConfigurationError):
        fp_solve(rho, pot_v1, 10.0, 0.03, snapshot_times=(0.0,))
    with pytest.raises(ConfigurationError):
        fp_solve(rho, pot_v1, 10.0, 0.03, snapshot_times=(0.05,))
    with pytest.raises(ConfigurationError):
        fp_solve(rho, pot_v1, 10.0, t_final=-0.01)
    with pytest.raises(ConfigurationError):
        fp_solve(rho, pot_v1, 10.0, 0.03, safety=0.0)


def test_regularized_force_singular_windows(pot_v1):
    vals = np.zeros((32, 16))
    vals[:4, :] = 1.0
    rho = GridDensity(vals, 4.0, 2.0)
    rho.values /= rho.mass()
    narrow = KernelSpec(epsilon=0.125, alpha=0.0, period=4.0)
    with pytest.raises(SingularDensityError):
        regularized_force(rho, pot_v1, narrow)
    floored = KernelSpec(epsilon=0.125, alpha=0.1, period=4.0)
    prof = regularized_force(rho, pot_v1, floored)
    assert prof.kind == "pde"
    np.testing.assert_array_equal(prof.grid, rho.x1_nodes())
    assert np.all(np.isfinite(prof.values))


def test_regularized_force_of_biased_stationary_state(pot_v1):
    """F[rho] of the perfectly biased Gibbs state is the kernel-smoothed
    mean force. A' jumps at the period seam, so the L1 error is O(eps)
    (smearing of the jump) while away from the seam the smoothing bias
    is O(eps^2)."""
    rho = stationary_density(pot_v1, beta=10.0, m1=512, m2=128, y_max=4.0)
    exact = mean_force(pot_v1, 10.0, m=512)
    seam_dist = np.abs(wrap(exact.grid - 2.0, 4.0))
    l1 = []
    sup_interior = []
    for eps in (0.25, 0.125, 0.0625, 0.03125):
        prof = regularized_force(
            rho, pot_v1, KernelSpec(epsilon=eps, alpha=0.0, period=4.0)
        )
        gap = np.abs(prof.values - exact.values)
        l1.append(grid_l1(prof.values, exact.values, 4.0))
        sup_interior.append(gap[seam_dist > 4 * eps].max())
    assert all(b < 0.6 * a for a, b in zip(l1, l1[1:]))
    assert all(b < 0.35 * a for a, b in zip(sup_interior, sup_interior[1:]))
    assert l1[-1] <= 0.3
    assert sup_interior[-1] <= 0.02


def test_workspace_period_checks(pot_v1):
    rho = GridDensity(np.ones((16, 8)), 2.0, 2.0)
    with pytest.raises(ConfigurationError):
        stable_dt(rho, pot_v1, 10.0)
    rho4 = GridDensity(np.ones((16, 8)), 4.0, 2.0)
    with pytest.raises(ConfigurationError):
        stable_dt(rho4, pot_v1, 10.0, kernel=KernelSpec(0.1, 0.0, 2.0))
