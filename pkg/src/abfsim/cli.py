"""Command-line interface.

    abf run <preset> [--seed S] [--seeds K] [--steps N] [--out DIR]
                     [--config FILE] [--check] [key=value ...]
    abf reference --potential v1 --beta 10 [--m M] [--out FILE]
    abf pde --potential v1 --beta 1 [--epsilon E] [--t T] [--out DIR] ...

Exit codes: 0 success, 2 bad configuration or usage, 3 numerical
failure during a valid run, 4 threshold failure in --check mode.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import config as config_mod
from . import experiments
from .dynamics import InitialCondition
from .errors import ComputationError, UsageError
from .kernels import KernelSpec
from .pde import density_from_init, fp_solve, heat_solve
from .potentials import POTENTIALS, make_potential
from .reference import reference_profiles


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="abf",
        description="Adaptive-biasing-force simulations and references.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment preset")
    run.add_argument("preset", nargs="?", default=None,
                     help="preset name (see --list)")
    run.add_argument("overrides", nargs="*", default=[],
                     help="config overrides as section.key=value")
    run.add_argument("--config", help="config file applied over the preset")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--seed", type=int, help="base seed (sim.seed)")
    run.add_argument("--seeds", type=int, help="number of seeds")
    run.add_argument("--steps", type=int, help="number of steps (sim.steps)")
    run.add_argument("--n-values", help="comma list for sweep.n_values")
    run.add_argument("--eps-values", help="comma list for sweep.eps_values")
    run.add_argument("--check", action="store_true",
                     help="evaluate the preset's thresholds; exit 4 on failure")
    run.add_argument("--list", action="store_true", dest="list_presets",
                     help="list presets and exit")

    ref = sub.add_parser("reference", help="exact profiles by quadrature")
    ref.add_argument("--potential", default="v1",
                     choices=sorted(POTENTIALS))
    ref.add_argument("--beta", type=float, default=10.0)
    ref.add_argument("--m", type=int, default=400, help="grid nodes")
    ref.add_argument("--y-max", type=float, default=6.0)
    ref.add_argument("--n-quad", type=int, default=200)
    ref.add_argument("--period", type=float, default=1.0,
                     help="period for sine_quadratic")
    ref.add_argument("--out", default="reference_profile.csv")

    pde = sub.add_parser("pde", help="evolve the grid density")
    pde.add_argument("--potential", default="v1", choices=sorted(POTENTIALS))
    pde.add_argument("--beta", type=float, default=1.0)
    pde.add_argument("--epsilon", type=float, default=0.05)
    pde.add_argument("--alpha", type=float, default=0.0)
    pde.add_argument("--no-bias", action="store_true",
                     help="plain Fokker-Planck without the kernel bias")
    pde.add_argument("--m1", type=int, default=128)
    pde.add_argument("--m2", type=int, default=128)
    pde.add_argument("--y-max", type=float, default=4.0)
    pde.add_argument("--t", type=float, default=1.0)
    pde.add_argument("--init", default="gaussian",
                     choices=("gaussian", "uniform_x1", "cosine_x1"))
    pde.add_argument("--center", default="-1.0,0.0")
    pde.add_argument("--sigma", type=float, default=0.3)
    pde.add_argument("--period", type=float, default=1.0,
                     help="period for sine_quadratic")
    pde.add_argument("--out", default="pde_out")
    return parser


def _cmd_run(args):
    if args.list_presets:
        for name in sorted(experiments.PRESETS):
            print(name)
        return 0
    if args.preset is None:
        raise UsageError("missing preset name (try: abf run --list)")
    cfg = experiments.preset_config(args.preset)
    if args.config:
        cfg = config_mod.parse_config(args.config, base=cfg)
        if cfg.experiment != args.preset:
            raise UsageError(
                f"config file sets experiment={cfg.experiment}, but preset "
                f"'{args.preset}' was requested"
            )
    cfg = config_mod.apply_overrides(cfg, args.overrides)
    flag_pairs = []
    if args.seed is not None:
        flag_pairs.append(f"sim.seed={args.seed}")
    if args.seeds is not None:
        flag_pairs.append(f"seeds={args.seeds}")
    if args.steps is not None:
        flag_pairs.append(f"sim.steps={args.steps}")
    if args.n_values is not None:
        flag_pairs.append(f"sweep.n_values={args.n_values}")
    if args.eps_values is not None:
        flag_pairs.append(f"sweep.eps_values={args.eps_values}")
    cfg = config_mod.apply_overrides(cfg, flag_pairs)
    out_dir = args.out if args.out is not None else f"out_{cfg.experiment}"
    _, checks = experiments.run_experiment(cfg, out_dir, check=args.check)
    if args.check and any(not ok for _, ok, _ in checks):
        return 4
    return 0


def _cmd_reference(args):
    kwargs = {"period": args.period} if args.potential == "sine_quadratic" else {}
    potential = make_potential(args.potential, **kwargs)
    free, force = reference_profiles(
        potential, args.beta, m=args.m, y_max=args.y_max, n_quad=args.n_quad
    )
    experiments.write_csv(
        args.out,
        "reference_profile",
        ["x1", "free_energy", "mean_force"],
        list(zip(free.grid, free.values, force.values)),
    )
    print(f"wrote {args.out} ({args.m} nodes, beta={args.beta:g})")
    return 0


def _cmd_pde(args):
    import os

    kwargs = {"period": args.period} if args.potential == "sine_quadratic" else {}
    potential = make_potential(args.potential, **kwargs)
    center = tuple(float(c) for c in args.center.split(","))
    init = InitialCondition(kind=args.init, center=center, sigma=args.sigma)
    rho0 = density_from_init(init, potential.period, args.y_max,
                             args.m1, args.m2)
    kernel = None
    if not args.no_bias:
        kernel = KernelSpec(epsilon=args.epsilon, alpha=args.alpha,
                            period=potential.period)
    final, _ = fp_solve(rho0, potential, args.beta, args.t, kernel=kernel)
    os.makedirs(args.out, exist_ok=True)
    marg = final.x1_marginal()
    heat = heat_solve(rho0.x1_marginal(), potential.period, args.beta, args.t)
    experiments.write_csv(
        os.path.join(args.out, "marginal.csv"),
        "pde_marginal",
        ["x1", "marginal", "heat_reference"],
        list(zip(final.x1_nodes(), marg, heat)),
    )
    x2 = final.x2_nodes()
    rows = []
    for i, z in enumerate(final.x1_nodes()):
        for j, y in enumerate(x2):
            rows.append([z, y, final.values[i, j]])
    experiments.write_csv(
        os.path.join(args.out, "density.csv"),
        "pde_density",
        ["x1", "x2", "density"],
        rows,
    )
    drift = final.mass() - rho0.mass()
    l1 = float(np.abs(marg - heat).sum() * final.h1)
    print(f"evolved to t={args.t:g}: mass drift {drift:+.2e}, "
          f"marginal vs heat L1 = {l1:.5f}")
    print(f"wrote {args.out}/marginal.csv and {args.out}/density.csv")
    return 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "reference": _cmd_reference,
        "pde": _cmd_pde,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
