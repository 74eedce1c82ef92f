"""Experiment presets, runners, and output files.

Each preset configures and runs one of the bundled studies and writes
into its output directory:

* ``config.txt``  -- the effective configuration (re-runnable as-is),
* ``summary.txt`` -- headline metrics, one ``key=value`` per line,
* CSV files       -- data series; every CSV starts with a versioned
  comment line ``# abfsim-csv v1 <name>`` followed by a column header.

All outputs are a pure function of the configuration, so a rerun from
the config echo reproduces them bit-identically (timings go to stdout,
never into files). ``--check`` mode re-evaluates the preset's headline
thresholds and reports pass/fail per check.
"""

from __future__ import annotations

import dataclasses
import os
import time
from dataclasses import replace

import numpy as np

from .config import (
    ExperimentConfig,
    GridConfig,
    InitialCondition,
    KernelConfig,
    PdeConfig,
    PotentialConfig,
    ProfileConfig,
    SimulationConfig,
    build_kernel,
    build_potential,
    serialize_config,
    validate_config,
)
from .dynamics import (
    ProfileAccumulator,
    advance,
    nw_profile,
    sample_initial,
)
from .errors import UsageError
from .kernels import KernelSpec
from .metrics import (
    binned_conditional_mean,
    fourier_amplitude,
    grid_l1,
    integrate_profile,
    loglog_slope,
    marginal_histogram,
    well_crossing_fraction,
    well_populations,
)
from .pde import (
    density_from_init,
    fp_solve,
    heat_solve,
    regularized_force,
    stationary_density,
)
from .reference import mean_force, profile_grid


# ---------------------------------------------------------------------------
# Presets


def _preset_v1_abf():
    return ExperimentConfig(
        experiment="v1-abf",
        seeds=5,
        potential=PotentialConfig(name="v1"),
        sim=SimulationConfig(beta=10.0, dt=0.01, steps=2000, n_particles=1000,
                             seed=12345, mode="abf", engine="numpy"),
        kernel=KernelConfig(epsilon=0.01, alpha=0.0),
        init=InitialCondition(kind="gaussian", center=(-1.0, 0.0), sigma=0.1),
    )


def _preset_v1_langevin():
    cfg = _preset_v1_abf()
    return replace(
        cfg,
        experiment="v1-langevin",
        seeds=1,
        sim=replace(cfg.sim, n_particles=200, mode="langevin"),
    )


def _preset_sweep_n():
    cfg = _preset_v1_abf()
    return replace(cfg, experiment="sweep-n", seeds=8)


def _preset_sweep_eps():
    cfg = _preset_v1_abf()
    return replace(
        cfg,
        experiment="sweep-eps",
        seeds=2,
        sim=replace(cfg.sim, n_particles=1500, engine="auto"),
    )


def _preset_eps_large():
    cfg = _preset_v1_abf()
    return replace(
        cfg,
        experiment="eps-large",
        seeds=1,
        sim=replace(cfg.sim, n_particles=200),
        kernel=KernelConfig(epsilon=1.0, alpha=0.0),
    )


def _preset_v2_short():
    return ExperimentConfig(
        experiment="v2-short",
        seeds=3,
        potential=PotentialConfig(name="v2"),
        sim=SimulationConfig(beta=10.0, dt=0.01, steps=2000, n_particles=1000,
                             seed=20230, mode="abf", engine="auto"),
        kernel=KernelConfig(epsilon=0.01, alpha=0.0),
        init=InitialCondition(kind="gaussian", center=(-1.0, 0.0), sigma=0.1),
    )


def _preset_v2_long():
    cfg = _preset_v2_short()
    return replace(
        cfg,
        experiment="v2-long",
        seeds=1,
        sim=replace(cfg.sim, steps=2_000_000),
    )


def _preset_bias_demo():
    # dt is an order of magnitude below the other presets: on the unit
    # torus the Euler-Maruyama chain's stationary law is only O((2pi/L)^2 dt)
    # close to the diffusion's, and at dt = 0.01 that skews the sampled
    # conditional mean of x2 by ~20%.
    return ExperimentConfig(
        experiment="bias-demo",
        seeds=1,
        potential=PotentialConfig(name="sine_quadratic", period=1.0),
        sim=SimulationConfig(beta=1.0, dt=0.001, steps=8000, n_particles=4000,
                             seed=777, mode="abf", engine="auto"),
        kernel=KernelConfig(epsilon=0.05, alpha=0.0),
        init=InitialCondition(kind="uniform_x1", center=(0.0, 0.0), sigma=1.0),
        grid=GridConfig(m=200),
        profile=ProfileConfig(every=1, burn_frac=0.625),
    )


def _preset_pde_xval():
    return ExperimentConfig(
        experiment="pde-xval",
        seeds=1,
        potential=PotentialConfig(name="v1"),
        sim=SimulationConfig(beta=1.0, dt=0.01, steps=100, n_particles=5000,
                             seed=424242, mode="zero_bandwidth", engine="numpy"),
        kernel=KernelConfig(epsilon=0.05, alpha=0.0),
        init=InitialCondition(kind="cosine_x1", center=(0.0, 0.0), sigma=0.5),
        pde=PdeConfig(m1=128, m2=128, y_max=4.0, times=(0.25, 0.5, 1.0), bins=10),
    )


PRESETS = {
    "v1-abf": _preset_v1_abf,
    "v1-langevin": _preset_v1_langevin,
    "sweep-n": _preset_sweep_n,
    "sweep-eps": _preset_sweep_eps,
    "eps-large": _preset_eps_large,
    "v2-short": _preset_v2_short,
    "v2-long": _preset_v2_long,
    "bias-demo": _preset_bias_demo,
    "pde-xval": _preset_pde_xval,
}


def preset_config(name):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise UsageError(
            f"unknown preset '{name}' (known: {', '.join(sorted(PRESETS))})"
        ) from None
    return factory()


# ---------------------------------------------------------------------------
# Output helpers


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, name, columns, rows):
    with open(path, "w") as fh:
        fh.write(f"# abfsim-csv v1 {name}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_summary(path, entries):
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={_fmt(value)}\n")


def _write_particles(path, ensemble, step):
    d = ensemble.dim
    cols = ["step", "time", "particle"] + [f"x{i + 1}" for i in range(d)]
    rows = [
        [step, ensemble.time, i] + list(ensemble.positions[i])
        for i in range(ensemble.n)
    ]
    write_csv(path, "particles", cols, rows)


# ---------------------------------------------------------------------------
# Shared runners


def _seed_list(cfg):
    return [cfg.sim.seed + k for k in range(cfg.seeds)]


def _abf_seed_run(cfg, potential, kernel, seed, steps=None):
    """One ABF run; returns (profile, final ensemble).

    The profile is the occupation-weighted time average after burn-in;
    for a zero-step run it degrades to the instantaneous estimate on
    the initial ensemble.
    """
    sim = replace(cfg.sim, seed=seed, steps=cfg.sim.steps if steps is None else steps)
    ens = sample_initial(potential, sim, cfg.init)
    skip = int(round(cfg.profile.burn_frac * sim.steps))
    acc = ProfileAccumulator(kernel, m=cfg.grid.m, skip=skip,
                             every=cfg.profile.every)
    final = advance(ens, potential, sim, kernel=kernel, accumulator=acc)
    if acc.steps_used > 0:
        profile = acc.result()
    else:
        grad1 = potential.gradient(final.positions)[:, 0]
        profile = nw_profile(final.positions[:, 0], grad1, kernel, m=cfg.grid.m)
    return profile, final


def _exact_force(cfg, potential):
    return mean_force(
        potential,
        cfg.sim.beta,
        m=cfg.grid.m,
        y_max=cfg.reference.y_max,
        n_quad=cfg.reference.n_quad,
    )


def _profile_errors(profile, exact, period):
    """(force error, free-energy error) of an estimated profile.

    The force error is the plain grid L1 distance.  The free-energy
    error compares the periodic antiderivatives of the two profiles;
    a localized force mismatch (e.g. one badly sampled channel) shows
    up much smaller there, which matches how the profiles read when
    plotted as free energies.
    """
    err_force = grid_l1(profile.values, exact.values, period)
    err_free = grid_l1(
        integrate_profile(profile.values, period),
        integrate_profile(exact.values, period),
        period,
    )
    return err_force, err_free


def _write_profiles(out_dir, profile, exact, period):
    write_csv(
        os.path.join(out_dir, "force_profile.csv"),
        "force_profile",
        ["x1", "estimate", "exact", "missing"],
        [
            [z, e, x, bool(m)]
            for z, e, x, m in zip(
                profile.grid, profile.values, exact.values, profile.missing
            )
        ],
    )
    write_csv(
        os.path.join(out_dir, "free_energy_profile.csv"),
        "free_energy_profile",
        ["x1", "estimate", "exact"],
        list(zip(profile.grid,
                 integrate_profile(profile.values, period),
                 integrate_profile(exact.values, period))),
    )


def _run_accuracy(cfg, out_dir):
    """v1-abf / eps-large / v2-short: seed-averaged profile error."""
    potential, kernel = validate_config(cfg)
    exact = _exact_force(cfg, potential)
    results = []
    first = None
    for seed in _seed_list(cfg):
        t0 = time.perf_counter()
        profile, final = _abf_seed_run(cfg, potential, kernel, seed)
        elapsed = time.perf_counter() - t0
        err, err_free = _profile_errors(profile, exact, potential.period)
        results.append((seed, err, err_free))
        print(f"  seed {seed}: grid_l1 = {err:.4f} (free energy "
              f"{err_free:.4f})  ({elapsed:.1f}s)")
        if first is None:
            first = (profile, final)
    profile, final = first
    _write_profiles(out_dir, profile, exact, potential.period)
    _write_particles(os.path.join(out_dir, "particles_final.csv"), final,
                     cfg.sim.steps)
    write_csv(
        os.path.join(out_dir, "errors.csv"),
        "errors",
        ["seed", "grid_l1", "free_energy_l1"],
        results,
    )
    errs = np.array([e for _, e, _ in results])
    frees = np.array([f for _, _, f in results])
    return {
        "preset": cfg.experiment,
        "seeds": cfg.seeds,
        "mean_l1": errs.mean(),
        "min_l1": errs.min(),
        "max_l1": errs.max(),
        "mean_l1_free": frees.mean(),
        "norm_exact_l1": grid_l1(exact.values, np.zeros_like(exact.values),
                                 potential.period),
        "missing_nodes_seed0": profile.n_missing,
    }


def _run_v1_langevin(cfg, out_dir):
    """Metastability contrast: plain Langevin stays in its well while a
    matched ABF ensemble crosses."""
    potential, kernel = validate_config(cfg)
    summary = {"preset": cfg.experiment, "seeds": cfg.seeds}
    for mode in ("langevin", "abf"):
        sim = replace(cfg.sim, mode=mode)
        ens = sample_initial(potential, sim, cfg.init)
        start_x1 = ens.positions[:, 0].copy()
        final = advance(ens, potential, sim,
                        kernel=kernel if mode == "abf" else None)
        crossing = well_crossing_fraction(start_x1, final.positions[:, 0])
        left, right = well_populations(final.positions[:, 0])
        summary[f"crossing_{mode}"] = crossing
        summary[f"pop_left_{mode}"] = left
        summary[f"pop_right_{mode}"] = right
        _write_particles(
            os.path.join(out_dir, f"particles_final_{mode}.csv"), final,
            sim.steps,
        )
        print(f"  {mode}: crossing = {crossing:.3f}, wells = "
              f"{left:.2f}/{right:.2f}")
    return summary


def _run_sweep_n(cfg, out_dir):
    potential, kernel = validate_config(cfg)
    exact = _exact_force(cfg, potential)
    rows = []
    means = []
    for n in cfg.sweep.n_values:
        errs = []
        for seed in _seed_list(cfg):
            sub = replace(cfg, sim=replace(cfg.sim, n_particles=int(n)))
            profile, _ = _abf_seed_run(sub, potential, kernel, seed)
            err = grid_l1(profile.values, exact.values, potential.period)
            rows.append((int(n), seed, err))
            errs.append(err)
        means.append((int(n), float(np.mean(errs))))
        print(f"  N={n}: mean grid_l1 = {means[-1][1]:.4f}")
    write_csv(os.path.join(out_dir, "errors.csv"), "errors",
              ["n_particles", "seed", "grid_l1"], rows)
    write_csv(os.path.join(out_dir, "means.csv"), "means",
              ["n_particles", "mean_l1"], means)
    ns = np.array([n for n, _ in means], dtype=float)
    es = np.array([e for _, e in means])
    slope = loglog_slope(ns, es)
    print(f"  fitted slope = {slope:.3f}")
    summary = {
        "preset": cfg.experiment,
        "seeds": cfg.seeds,
        "slope": slope,
    }
    for n, e in means:
        summary[f"mean_l1_n{n}"] = e
    return summary


def _run_sweep_eps(cfg, out_dir):
    potential, _ = validate_config(cfg)
    exact = _exact_force(cfg, potential)
    rows = []
    means = []
    for eps in cfg.sweep.eps_values:
        kernel = KernelSpec(epsilon=float(eps), alpha=cfg.kernel.alpha,
                            period=potential.period)
        errs = []
        for seed in _seed_list(cfg):
            sub = replace(cfg, kernel=KernelConfig(epsilon=float(eps),
                                                   alpha=cfg.kernel.alpha))
            profile, _ = _abf_seed_run(sub, potential, kernel, seed)
            err = grid_l1(profile.values, exact.values, potential.period)
            rows.append((float(eps), seed, err))
            errs.append(err)
        means.append((float(eps), float(np.mean(errs))))
        print(f"  eps={eps:g}: mean grid_l1 = {means[-1][1]:.4f}")
    write_csv(os.path.join(out_dir, "errors.csv"), "errors",
              ["epsilon", "seed", "grid_l1"], rows)
    write_csv(os.path.join(out_dir, "means.csv"), "means",
              ["epsilon", "mean_l1"], means)
    summary = {"preset": cfg.experiment, "seeds": cfg.seeds}
    for eps, e in means:
        summary[f"mean_l1_eps{eps:g}"] = e
    return summary


def _run_v2_long(cfg, out_dir):
    """Short/long pair on the poorly-coordinated landscape; the long run
    must improve on the short one seed by seed (headline metric: the
    free-energy profile error, see _profile_errors)."""
    potential, kernel = validate_config(cfg)
    exact = _exact_force(cfg, potential)
    short_steps = 2000
    rows = []
    first = None
    for seed in _seed_list(cfg):
        t0 = time.perf_counter()
        prof_short, _ = _abf_seed_run(cfg, potential, kernel, seed,
                                      steps=short_steps)
        force_short, free_short = _profile_errors(prof_short, exact,
                                                  potential.period)
        prof_long, final = _abf_seed_run(cfg, potential, kernel, seed)
        force_long, free_long = _profile_errors(prof_long, exact,
                                                potential.period)
        elapsed = time.perf_counter() - t0
        rows.append((seed, free_short, free_long, force_short, force_long,
                     free_long < free_short))
        print(f"  seed {seed}: short = {free_short:.4f}, "
              f"long({cfg.sim.steps} steps) = {free_long:.4f} "
              f"(force {force_short:.4f} -> {force_long:.4f})  "
              f"({elapsed:.1f}s)")
        if first is None:
            first = (prof_long, final)
    prof_long, final = first
    _write_profiles(out_dir, prof_long, exact, potential.period)
    _write_particles(os.path.join(out_dir, "particles_final.csv"), final,
                     cfg.sim.steps)
    write_csv(os.path.join(out_dir, "errors.csv"), "errors",
              ["seed", "l1_short", "l1_long", "l1_force_short",
               "l1_force_long", "improved"], rows)
    shorts = np.array([r[1] for r in rows])
    longs = np.array([r[2] for r in rows])
    return {
        "preset": cfg.experiment,
        "seeds": cfg.seeds,
        "steps_long": cfg.sim.steps,
        "steps_short": short_steps,
        "mean_l1_short": shorts.mean(),
        "mean_l1_long": longs.mean(),
        "mean_l1_force_short": float(np.mean([r[3] for r in rows])),
        "mean_l1_force_long": float(np.mean([r[4] for r in rows])),
        "all_improved": bool(np.all(longs < shorts)),
    }


def _run_bias_demo(cfg, out_dir):
    """Zero-bandwidth limit versus proper ABF on the flat-free-energy
    landscape: the former distorts the conditional mean of x2, the
    latter preserves it and estimates A' = 0.

    The first ``burn_frac`` of the steps equilibrate, the rest are
    measured. The ABF leg equilibrates with plain Langevin steps: the
    free energy here is flat, so the biased and unbiased chains share
    their stationary law, and skipping the kernel sums during burn-in
    is a factor-40 saving at this ensemble size.
    """
    potential, kernel = validate_config(cfg)
    m_bins = 32
    burn = int(round(cfg.profile.burn_frac * cfg.sim.steps))
    snap_every = 25

    pooled = {}
    summary = {"preset": cfg.experiment, "seeds": cfg.seeds}
    force_profile = None
    for mode in ("zero_bandwidth", "abf"):
        sim = replace(cfg.sim, mode=mode)
        ens = sample_initial(potential, sim, cfg.init)
        samples = []

        def keep(step, t, positions, _samples=samples):
            _samples.append(positions.copy())

        acc = None
        if mode == "abf":
            ens = advance(ens, potential, replace(sim, mode="langevin"),
                          n_steps=burn)
            acc = ProfileAccumulator(kernel, m=cfg.grid.m, skip=0,
                                     every=cfg.profile.every)
            advance(ens, potential, sim, kernel=kernel, accumulator=acc,
                    n_steps=cfg.sim.steps - burn,
                    observer=keep, observe_every=snap_every)
        else:

            def keep_late(step, t, positions, _samples=samples):
                if step > burn:
                    _samples.append(positions.copy())

            advance(ens, potential, sim, observer=keep_late,
                    observe_every=snap_every)
        pts = np.concatenate(samples, axis=0)
        grid, means, counts = binned_conditional_mean(
            pts[:, 0], pts[:, 1], potential.period, m_bins
        )
        if np.any(counts == 0):
            raise UsageError("empty conditional-mean bin; increase sampling")
        amp = fourier_amplitude(means, k=1)
        pooled[mode] = (grid, means)
        summary[f"amplitude_{mode}"] = amp
        print(f"  {mode}: first-harmonic amplitude = {amp:.4f}")
        if mode == "abf":
            force_profile = acc.result()
            sup = float(np.abs(force_profile.values).max())
            summary["force_sup_abf"] = sup
            print(f"  abf: sup |estimated A'| = {sup:.4f}")

    grid = pooled["zero_bandwidth"][0]
    write_csv(
        os.path.join(out_dir, "conditional_mean.csv"),
        "conditional_mean",
        ["x1", "mean_x2_zero_bandwidth", "mean_x2_abf"],
        list(zip(grid, pooled["zero_bandwidth"][1], pooled["abf"][1])),
    )
    write_csv(
        os.path.join(out_dir, "force_profile.csv"),
        "force_profile",
        ["x1", "estimate", "exact", "missing"],
        [
            [z, e, 0.0, bool(m)]
            for z, e, m in zip(
                force_profile.grid, force_profile.values, force_profile.missing
            )
        ],
    )
    return summary


def _run_pde_xval(cfg, out_dir):
    """Cross-validation against the grid solvers.

    1. The x1-marginal of the zero-bandwidth particle system follows the
       heat equation: histogram vs spectral solution.
    2. The biased-density solver's marginal matches the same heat flow.
    3. Feeding the exact biased stationary density to the regularized
       force recovers A' with an error monotone in epsilon and alpha.
    """
    potential, kernel = validate_config(cfg)
    L = potential.period
    beta = cfg.sim.beta
    times = list(cfg.pde.times)
    bins = cfg.pde.bins
    summary = {"preset": cfg.experiment, "seeds": cfg.seeds}

    # -- particle histogram vs heat flow
    sim = cfg.sim
    ens = sample_initial(potential, sim, cfg.init)
    snapshots = {}

    def keep(step, t, positions):
        for target in times:
            if abs(t - target) < sim.dt / 2:
                snapshots[target] = positions[:, 0].copy()

    total_steps = int(round(max(times) / sim.dt))
    advance(ens, potential, replace(sim, steps=total_steps), kernel=None,
            observer=keep, observe_every=1)
    fine = 24 * bins
    fine_grid = profile_grid(L, fine)
    p0_fine = (1.0 + np.cos(2 * np.pi * fine_grid / L)) / L
    heat_rows = []
    for target in times:
        hist_grid, hist = marginal_histogram(snapshots[target], L, bins)
        ref_fine = heat_solve(p0_fine, L, beta, target)
        ref_bins = ref_fine.reshape(bins, -1).mean(axis=1)
        err = grid_l1(hist, ref_bins, L)
        summary[f"heat_particle_l1_t{target:g}"] = err
        print(f"  particle vs heat at t={target:g}: L1 = {err:.4f}")
        heat_rows += [
            [target, z, h, r] for z, h, r in zip(hist_grid, hist, ref_bins)
        ]
    write_csv(os.path.join(out_dir, "heat_marginal.csv"), "heat_marginal",
              ["t", "x1", "histogram", "reference"], heat_rows)

    # -- grid solver marginal vs heat flow
    rho0 = density_from_init(cfg.init, L, cfg.pde.y_max, cfg.pde.m1, cfg.pde.m2)
    p0 = rho0.x1_marginal()
    _, snaps = fp_solve(rho0, potential, beta, max(times), kernel=kernel,
                        snapshot_times=times)
    pde_rows = []
    for rho_t in snaps:
        ref = heat_solve(p0, L, beta, rho_t.time)
        marg = rho_t.x1_marginal()
        err = grid_l1(marg, ref, L)
        summary[f"heat_pde_l1_t{rho_t.time:g}"] = err
        print(f"  grid solver vs heat at t={rho_t.time:g}: L1 = {err:.5f}")
        pde_rows += [
            [rho_t.time, z, m, r]
            for z, m, r in zip(rho_t.x1_nodes(), marg, ref)
        ]
    write_csv(os.path.join(out_dir, "pde_marginal.csv"), "pde_marginal",
              ["t", "x1", "marginal", "reference"], pde_rows)

    # -- regularized force on the exact biased stationary density
    reg_beta = 10.0
    reg_m = 256
    rho_st = stationary_density(potential, reg_beta, reg_m, reg_m,
                                cfg.pde.y_max, biased=True,
                                ref_y_max=cfg.reference.y_max,
                                n_quad=cfg.reference.n_quad)
    exact = mean_force(potential, reg_beta, m=reg_m,
                       y_max=cfg.reference.y_max, n_quad=cfg.reference.n_quad)
    reg_rows = []
    for eps in (0.2, 0.1, 0.05):
        spec = KernelSpec(epsilon=eps, alpha=0.0, period=L)
        prof = regularized_force(rho_st, potential, spec)
        err = float(np.abs(prof.values - exact.values).max())
        summary[f"reg_sup_err_eps{eps:g}"] = err
        reg_rows.append(["epsilon", eps, 0.0, err])
        print(f"  regularized force eps={eps:g}: sup err = {err:.4f}")
    for alpha in (0.0, 0.02, 0.05, 0.1):
        spec = KernelSpec(epsilon=0.05, alpha=alpha, period=L)
        prof = regularized_force(rho_st, potential, spec)
        err = float(np.abs(prof.values - exact.values).max())
        summary[f"reg_sup_err_alpha{alpha:g}"] = err
        reg_rows.append(["alpha", 0.05, alpha, err])
        print(f"  regularized force alpha={alpha:g}: sup err = {err:.4f}")
    write_csv(os.path.join(out_dir, "regularization.csv"), "regularization",
              ["varied", "epsilon", "alpha", "sup_err"], reg_rows)
    return summary


_RUNNERS = {
    "v1-abf": _run_accuracy,
    "v1-langevin": _run_v1_langevin,
    "sweep-n": _run_sweep_n,
    "sweep-eps": _run_sweep_eps,
    "eps-large": _run_accuracy,
    "v2-short": _run_accuracy,
    "v2-long": _run_v2_long,
    "bias-demo": _run_bias_demo,
    "pde-xval": _run_pde_xval,
}


# ---------------------------------------------------------------------------
# Threshold checks (shared by --check and the acceptance tests)


def check_summary(name, summary):
    """Evaluate the preset's headline thresholds on its summary dict.

    Returns a list of (check_name, passed, detail) triples.
    """
    checks = []

    def add(label, ok, detail):
        checks.append((label, bool(ok), detail))

    if name == "v1-abf":
        v = summary["mean_l1"]
        add("mean grid_l1 in [0.01, 0.20]", 0.01 <= v <= 0.20, f"value {v:.4f}")
    elif name == "sweep-n":
        s = summary["slope"]
        add("slope in [-0.85, -0.35]", -0.85 <= s <= -0.35, f"value {s:.3f}")
    elif name == "sweep-eps":
        mid = summary["mean_l1_eps0.01"]
        big = summary["mean_l1_eps1"]
        tiny = summary["mean_l1_eps0.0001"]
        add("err(eps=1) >= 3 x err(eps=1e-2)", big >= 3 * mid,
            f"{big:.4f} vs 3 x {mid:.4f}")
        add("err(eps=1e-4) > err(eps=1e-2)", tiny > mid,
            f"{tiny:.4f} vs {mid:.4f}")
    elif name == "v1-langevin":
        c = summary["crossing_langevin"]
        lo = min(summary["pop_left_abf"], summary["pop_right_abf"])
        add("langevin crossing <= 0.05", c <= 0.05, f"value {c:.3f}")
        add("abf wells both >= 20%", lo >= 0.20, f"min well {lo:.2f}")
    elif name == "v2-short":
        v = summary["mean_l1_free"]
        add("mean free-energy l1 in [0.2, 0.8]", 0.2 <= v <= 0.8,
            f"value {v:.4f}")
    elif name == "v2-long":
        add("long improves on short for every seed", summary["all_improved"],
            f"free-energy l1 short {summary['mean_l1_short']:.4f} -> long "
            f"{summary['mean_l1_long']:.4f}")
        if summary["steps_long"] >= 2_000_000:
            v = summary["mean_l1_long"]
            add("full-length free-energy l1 <= 0.25", v <= 0.25,
                f"value {v:.4f}")
    elif name == "eps-large":
        v = summary["mean_l1"]
        add("oversmoothed error >= 0.2", v >= 0.2, f"value {v:.4f}")
    elif name == "bias-demo":
        az = summary["amplitude_zero_bandwidth"]
        aa = summary["amplitude_abf"]
        fs = summary["force_sup_abf"]
        add("zero-bandwidth amplitude in [0, 0.1]", 0 <= az <= 0.1,
            f"value {az:.4f}")
        add("abf amplitude in [0.8, 1.1]", 0.8 <= aa <= 1.1, f"value {aa:.4f}")
        add("sup |estimated A'| <= 0.15", fs <= 0.15, f"value {fs:.4f}")
    elif name == "pde-xval":
        for key, val in summary.items():
            if key.startswith("heat_particle_l1_"):
                add(f"{key} <= 0.05", val <= 0.05, f"value {val:.4f}")
            if key.startswith("heat_pde_l1_"):
                add(f"{key} <= 0.02", val <= 0.02, f"value {val:.5f}")
        eps_errs = [summary[f"reg_sup_err_eps{e:g}"] for e in (0.2, 0.1, 0.05)]
        add("sup err monotone as eps halves",
            eps_errs[0] > eps_errs[1] > eps_errs[2],
            " > ".join(f"{e:.3f}" for e in eps_errs))
        alpha_errs = [summary[f"reg_sup_err_alpha{a:g}"]
                      for a in (0.0, 0.02, 0.05, 0.1)]
        add("sup err monotone in alpha",
            all(a < b for a, b in zip(alpha_errs, alpha_errs[1:])),
            " < ".join(f"{e:.3f}" for e in alpha_errs))
    return checks


def run_experiment(cfg, out_dir, check=False):
    """Run a configured preset; returns (summary, checks).

    ``checks`` is empty unless ``check`` is true. Writes config echo,
    summary, and the preset's CSVs into ``out_dir``.
    """
    runner = _RUNNERS.get(cfg.experiment)
    if runner is None:
        raise UsageError(
            f"unknown preset '{cfg.experiment}' "
            f"(known: {', '.join(sorted(_RUNNERS))})"
        )
    os.makedirs(out_dir, exist_ok=True)
    validate_config(cfg)
    with open(os.path.join(out_dir, "config.txt"), "w") as fh:
        fh.write(serialize_config(cfg))
    t0 = time.perf_counter()
    print(f"running {cfg.experiment} -> {out_dir}")
    summary = runner(cfg, out_dir)
    print(f"done in {time.perf_counter() - t0:.1f}s")
    write_summary(os.path.join(out_dir, "summary.txt"), summary)
    checks = check_summary(cfg.experiment, summary) if check else []
    for label, ok, detail in checks:
        print(f"  [{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    return summary, checks
