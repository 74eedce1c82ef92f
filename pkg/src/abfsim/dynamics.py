"""Interacting-particle Langevin dynamics with an adaptive biasing force.

A system of n particles X_1, ..., X_n in R^d evolves by the
Euler-Maruyama discretization of overdamped Langevin dynamics,

    X_k(t + dt) = X_k(t) + dt * F_k(t) + sqrt(2 dt / beta) * G_k,

with independent standard Gaussian increments G_k drawn from one
counter-based stream per particle. The force F_k depends on the mode:

* ``langevin``        F_k = -grad V(X_k)
* ``abf``             F_k = -grad V(X_k) + e1 * Fhat(X_k^1)
* ``zero_bandwidth``  F_k = -grad V(X_k) + e1 * (mean of d1V over the
  particles sharing X_k's exact first coordinate -- with probability one
  just X_k itself, so the first coordinate performs plain diffusion)

where Fhat is the kernel-weighted conditional average of d1V over the
ensemble evaluated at the particle's own first coordinate,

    Fhat(z) = sum_m phi(z - X_m^1) d1V(X_m)
            / sum_m phi(z - X_m^1),

phi = alpha + psi_eps from :mod:`abfsim.kernels`, with the particle
itself included in the sums. All kernel evaluations of one step use the
positions frozen at the start of the step. As the estimate converges to
the free-energy derivative A', the biased drift flattens the landscape
along x1 and barrier crossings stop being rare.

First coordinates are kept wrapped to [-L/2, L/2). Estimates at query
points whose kernel window contains no sample (possible only with
alpha = 0) fall back to 0 and are flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, StepError
from .kernels import KernelSpec, bump, phi
from .potentials import wrap
from .reference import MeanForceProfile, profile_grid

MODES = ("abf", "langevin", "zero_bandwidth")
ENGINES = ("numpy", "numba", "auto")

# Upper bound on floats drawn per noise chunk, to cap memory.
_CHUNK_BUDGET = 2**21


@dataclass(frozen=True)
class InitialCondition:
    """How the ensemble is seeded at time zero.

    kinds
    -----
    ``gaussian``    every coordinate ~ N(center_i, sigma^2)
    ``uniform_x1``  x1 uniform on the period, the rest Gaussian
    ``cosine_x1``   x1 ~ (1 + cos(2 pi x / L)) / L, the rest Gaussian
    """

    kind: str = "gaussian"
    center: tuple[float, ...] = (-1.0, 0.0)
    sigma: float = 0.1

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform_x1", "cosine_x1"):
            raise ConfigurationError(
                f"unknown initial condition kind '{self.kind}'"
            )
        if self.sigma < 0:
            raise ConfigurationError(f"init sigma must be >= 0, got {self.sigma}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


@dataclass(frozen=True)
class SimulationConfig:
    beta: float = 10.0
    dt: float = 0.01
    steps: int = 2000
    n_particles: int = 1000
    seed: int = 12345
    mode: str = "abf"
    engine: str = "numpy"

    def __post_init__(self):
        if self.beta <= 0:
            raise ConfigurationError(f"beta must be positive, got {self.beta}")
        if self.dt < 0:
            raise ConfigurationError(f"dt must be >= 0, got {self.dt}")
        if self.steps < 0:
            raise ConfigurationError(f"steps must be >= 0, got {self.steps}")
        if self.n_particles < 1:
            raise ConfigurationError(
                f"n_particles must be >= 1, got {self.n_particles}"
            )
        if self.mode not in MODES:
            raise ConfigurationError(
                f"unknown mode '{self.mode}' (choose from {', '.join(MODES)})"
            )
        if self.engine not in ENGINES:
            raise ConfigurationError(
                f"unknown engine '{self.engine}' (choose from {', '.join(ENGINES)})"
            )


@dataclass
class ParticleEnsemble:
    """Positions plus one random stream per particle.

    The streams are stateful: advancing the ensemble consumes random
    numbers from them. ``clone`` deep-copies stream states so two copies
    can be advanced independently.
    """

    positions: np.ndarray
    streams: tuple
    time: float = 0.0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 2:
            raise ConfigurationError(
                f"positions must be (n, d), got shape {self.positions.shape}"
            )
        self.streams = tuple(self.streams)
        if len(self.streams) != self.positions.shape[0]:
            raise ConfigurationError(
                f"{len(self.streams)} streams for {self.positions.shape[0]} particles"
            )

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]

    def clone(self):
        streams = []
        for g in self.streams:
            bg = np.random.Philox()
            bg.state = g.bit_generator.state
            streams.append(np.random.Generator(bg))
        return ParticleEnsemble(self.positions.copy(), tuple(streams), self.time)

    def permuted(self, perm):
        """Relabel particles: positions and streams move together."""
        perm = np.asarray(perm)
        if sorted(perm.tolist()) != list(range(self.n)):
            raise ConfigurationError("perm must be a permutation of 0..n-1")
        return ParticleEnsemble(
            self.positions[perm].copy(),
            tuple(self.streams[i] for i in perm),
            self.time,
        )


def make_streams(seed, n_particles):
    """(init_generator, per-particle streams) from one root seed.

    Child sequence 0 seeds the initial-condition draw; children 1..n
    seed the per-particle noise streams, so the noise fed to particle k
    does not depend on the ensemble size or on chunking.
    """
    children = np.random.SeedSequence(seed).spawn(n_particles + 1)
    init_gen = np.random.Generator(np.random.Philox(children[0]))
    streams = tuple(
        np.random.Generator(np.random.Philox(c)) for c in children[1:]
    )
    return init_gen, streams


def sample_initial(potential, sim, init):
    """Draw the time-zero ensemble for a potential."""
    d = potential.dim
    if len(init.center) != d:
        raise ConfigurationError(
            f"init center has {len(init.center)} coordinates, potential "
            f"'{potential.name}' has dim {d}"
        )
    init_gen, streams = make_streams(sim.seed, sim.n_particles)
    pos = np.array(init.center, dtype=float) + init.sigma * init_gen.standard_normal(
        (sim.n_particles, d)
    )
    L = potential.period
    if init.kind == "uniform_x1":
        pos[:, 0] = init_gen.uniform(-L / 2, L / 2, size=sim.n_particles)
    elif init.kind == "cosine_x1":
        # Inverse-CDF sampling of (1 + cos(2 pi x / L)) / L on a table.
        xg = np.linspace(-L / 2, L / 2, 8193)
        cdf = (xg + L / 2) / L + np.sin(2 * np.pi * xg / L) / (2 * np.pi)
        u = init_gen.uniform(0.0, 1.0, size=sim.n_particles)
        pos[:, 0] = np.interp(u, cdf, xg)
    pos[:, 0] = wrap(pos[:, 0], L)
    return ParticleEnsemble(pos, streams, 0.0)


# ---------------------------------------------------------------------------
# Kernel-weighted conditional averages


def kernel_sums_naive(query, samples, values, spec, block=2**22):
    """(num, den, count) of the kernel sums by direct evaluation.

    num_i = sum_m phi(q_i - s_m) v_m,  den_i = sum_m phi(q_i - s_m),
    count_i = number of samples inside the bandwidth window of q_i
    (the alpha floor not counted). Quadratic cost; the reference
    implementation that the windowed path is tested against.
    """
    query = np.atleast_1d(np.asarray(query, dtype=float))
    samples = np.asarray(samples, dtype=float)
    values = np.asarray(values, dtype=float)
    if samples.shape != values.shape or samples.ndim != 1:
        raise ConfigurationError("samples and values must be matching 1d arrays")
    num = np.empty(query.size)
    den = np.empty(query.size)
    count = np.empty(query.size, dtype=np.int64)
    rows = max(1, block // max(samples.size, 1))
    for i in range(0, query.size, rows):
        q = query[i : i + rows, None]
        diff = wrap(q - samples[None, :], spec.period)
        w = spec.alpha + bump(diff / spec.epsilon) / spec.epsilon
        num[i : i + rows] = (w * values).sum(axis=1)
        den[i : i + rows] = w.sum(axis=1)
        count[i : i + rows] = (np.abs(diff) < spec.epsilon).sum(axis=1)
    return num, den, count


def _sorted_samples(x1, values, period):
    xw = wrap(np.asarray(x1, dtype=float), period)
    order = np.argsort(xw, kind="stable")
    return xw[order], np.asarray(values, dtype=float)[order], order


def _sums_windows_numpy(query, xs, vs, spec):
    """Kernel sums against sorted, wrapped samples xs (values vs).

    Queries must be wrapped; they need not be sorted. Each query only
    touches the samples inside its bandwidth window, located through
    binary search on a three-period tiling.
    """
    eps, alpha, L = spec.epsilon, spec.alpha, spec.period
    m = query.size
    xt = np.concatenate([xs - L, xs, xs + L])
    vt = np.concatenate([vs, vs, vs])
    # Strict windows (q - eps, q + eps); the kernel vanishes on the
    # boundary anyway, and the count then matches the naive |diff| < eps.
    lo = np.searchsorted(xt, query - eps, side="right")
    hi = np.searchsorted(xt, query + eps, side="left")
    counts = np.maximum(hi - lo, 0)
    total = int(counts.sum())
    if total:
        # Flat indices of every (query, in-window sample) pair.
        starts = np.cumsum(counts) - counts
        flat = np.arange(total) - np.repeat(starts, counts) + np.repeat(lo, counts)
        qidx = np.repeat(np.arange(m), counts)
        w = bump((query[qidx] - xt[flat]) / eps) / eps
        num = np.bincount(qidx, weights=w * vt[flat], minlength=m)
        den = np.bincount(qidx, weights=w, minlength=m)
    else:
        num = np.zeros(m)
        den = np.zeros(m)
    if alpha > 0:
        num += alpha * vs.sum()
        den += alpha * vs.size
    return num, den, counts


def _resolve_engine(engine):
    if engine == "numpy":
        return "numpy", _sums_windows_numpy
    if engine in ("numba", "auto"):
        try:
            from . import _fastpath
        except ImportError:
            if engine == "numba":
                raise ConfigurationError(
                    "engine 'numba' requested but numba is not installed; "
                    "use engine 'numpy' or 'auto'"
                ) from None
            return "numpy", _sums_windows_numpy
        return "numba", _fastpath.sums_windows
    raise ConfigurationError(f"unknown engine '{engine}'")


def kernel_sums(query, samples, values, spec, engine="numpy"):
    """(num, den, count) like :func:`kernel_sums_naive`, via sorted windows."""
    samples = np.asarray(samples, dtype=float)
    values = np.asarray(values, dtype=float)
    if samples.shape != values.shape or samples.ndim != 1:
        raise ConfigurationError("samples and values must be matching 1d arrays")
    _, sums_fn = _resolve_engine(engine)
    xs, vs, _ = _sorted_samples(samples, values, spec.period)
    qw = wrap(np.atleast_1d(np.asarray(query, dtype=float)), spec.period)
    if qw.size > 1 and not np.all(np.diff(qw) >= 0):
        order = np.argsort(qw, kind="stable")
        num, den, count = sums_fn(qw[order], xs, vs, spec)
        inv = np.empty_like(order)
        inv[order] = np.arange(order.size)
        return num[inv], den[inv], count[inv]
    return sums_fn(qw, xs, vs, spec)


def nw_estimate(query, samples, values, spec, method="windowed"):
    """Kernel-weighted conditional average of ``values`` at ``query``.

    Queries with an empty window (alpha = 0 only) give 0. Scalar query
    gives a float.
    """
    if method == "naive":
        num, den, _ = kernel_sums_naive(query, samples, values, spec)
    elif method == "windowed":
        num, den, _ = kernel_sums(query, samples, values, spec)
    else:
        raise ConfigurationError(f"unknown estimator method '{method}'")
    est = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    if np.ndim(query) == 0:
        return float(est[0])
    return est


def nw_profile(samples, values, spec, m=200, method="windowed"):
    """Conditional-average profile on the midpoint grid as a
    :class:`MeanForceProfile`, empty windows flagged in ``missing``."""
    grid = profile_grid(spec.period, m)
    if method == "naive":
        num, den, _ = kernel_sums_naive(grid, samples, values, spec)
    elif method == "windowed":
        num, den, _ = kernel_sums(grid, samples, values, spec)
    else:
        raise ConfigurationError(f"unknown estimator method '{method}'")
    est = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return MeanForceProfile(
        grid, est, spec.period, kind="particle", missing=den == 0
    )


class ProfileAccumulator:
    """Occupation-weighted time average of the mean-force estimate.

    Per observed step the kernel sums (num, den) over the grid are added
    to running totals; the final profile is sum(num) / sum(den), so each
    visit to a window contributes with its kernel weight. ``skip``
    initial steps are excluded (burn-in), then every ``every``-th step
    is used. Nodes whose accumulated den stays 0 are flagged missing.
    """

    def __init__(self, spec, m=200, skip=0, every=1):
        if skip < 0:
            raise ConfigurationError(f"skip must be >= 0, got {skip}")
        if every < 1:
            raise ConfigurationError(f"every must be >= 1, got {every}")
        self.spec = spec
        self.grid = profile_grid(spec.period, m)
        self.num = np.zeros(m)
        self.den = np.zeros(m)
        self.skip = skip
        self.every = every
        self.steps_seen = 0
        self.steps_used = 0

    def tick(self):
        """Advance the step counter; True when this step should be used."""
        due = (
            self.steps_seen >= self.skip
            and (self.steps_seen - self.skip) % self.every == 0
        )
        self.steps_seen += 1
        return due

    def add(self, num, den):
        self.num += num
        self.den += den
        self.steps_used += 1

    def result(self):
        covered = self.den > 0
        est = np.where(covered, self.num / np.where(covered, self.den, 1.0), 0.0)
        return MeanForceProfile(
            self.grid, est, self.spec.period, kind="particle", missing=~covered
        )


# ---------------------------------------------------------------------------
# Time stepping


def _tie_group_means(x1, values):
    """Mean of ``values`` over groups of exactly equal x1 (self included)."""
    uniq, inv = np.unique(x1, return_inverse=True)
    sums = np.bincount(inv, weights=values, minlength=uniq.size)
    counts = np.bincount(inv, minlength=uniq.size)
    return (sums / counts)[inv]


def _advance_positions(positions, noise, potential, spec, sim, sums_fn,
                       accumulator=None, step_index=0, grad_fn=None):
    """One Euler-Maruyama step on a positions array (in place semantics:
    returns a new array). ``noise`` has shape (n, d)."""
    grad = grad_fn(positions) if grad_fn is not None else potential.gradient(positions)
    drift = -grad
    mode = sim.mode
    x1 = positions[:, 0]
    need_sorted = mode == "abf" or accumulator is not None
    if need_sorted:
        xs, vs, order = _sorted_samples(x1, grad[:, 0], spec.period)
    if accumulator is not None and accumulator.tick():
        gnum, gden, _ = sums_fn(accumulator.grid, xs, vs, spec)
        accumulator.add(gnum, gden)
    if mode == "abf":
        num, den, _ = sums_fn(xs, xs, vs, spec)
        est_sorted = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        est = np.empty_like(est_sorted)
        est[order] = est_sorted
        drift[:, 0] += est
    elif mode == "zero_bandwidth":
        drift[:, 0] += _tie_group_means(x1, grad[:, 0])
    if not np.all(np.isfinite(drift)):
        bad = int(np.argmin(np.isfinite(drift).all(axis=1)))
        raise StepError("non-finite force", particle=bad, step=step_index)
    scale = np.sqrt(2.0 * sim.dt / sim.beta)
    out = positions + sim.dt * drift + scale * noise
    out[:, 0] = wrap(out[:, 0], potential.period)
    if not np.all(np.isfinite(out)):
        bad = int(np.argmin(np.isfinite(out).all(axis=1)))
        raise StepError("non-finite position", particle=bad, step=step_index)
    return out


def _draw_noise(streams, k, d):
    """Noise for k steps: (k, n, d). Per-particle draws are contiguous in
    each stream, so trajectories do not depend on the chunk size."""
    n = len(streams)
    buf = np.empty((n, k, d))
    for i, g in enumerate(streams):
        buf[i] = g.standard_normal((k, d))
    return buf.transpose(1, 0, 2)


def _maybe_fast_gradient(potential, engine_name):
    if engine_name != "numba":
        return None
    try:
        from . import _fastpath
    except ImportError:
        return None
    return _fastpath.gradient_function(potential)


def step(ensemble, potential, sim, kernel=None, noise=None):
    """Advance the ensemble by a single step and return the new one."""
    return advance(ensemble, potential, sim, kernel=kernel, n_steps=1,
                   _noise_override=noise)


def advance(ensemble, potential, sim, kernel=None, *, n_steps=None,
            accumulator=None, observer=None, observe_every=0,
            _noise_override=None):
    """Advance the ensemble ``n_steps`` (default sim.steps) steps.

    kernel : KernelSpec, required for mode 'abf' or when accumulating.
    accumulator : ProfileAccumulator or None; fed the kernel sums of the
        pre-step state of every step it elects via its own schedule.
    observer : callable (step, time, positions) -> None, invoked after
        step s whenever s % observe_every == 0 (s starts at 1). The
        positions array is read-only; copy it to keep it.

    Returns a new ensemble; the random streams (shared with the input
    ensemble) are advanced in place.
    """
    if ensemble.positions.shape[1] != potential.dim:
        raise ConfigurationError(
            f"ensemble dim {ensemble.positions.shape[1]} != potential dim "
            f"{potential.dim}"
        )
    needs_kernel = sim.mode == "abf" or accumulator is not None
    if needs_kernel:
        if kernel is None:
            raise ConfigurationError(
                f"mode '{sim.mode}' with accumulation requires a kernel spec"
                if sim.mode != "abf"
                else "mode 'abf' requires a kernel spec"
            )
        if not isinstance(kernel, KernelSpec):
            raise ConfigurationError("kernel must be a KernelSpec")
        if kernel.period != potential.period:
            raise ConfigurationError(
                f"kernel period {kernel.period} != potential period "
                f"{potential.period}"
            )
    if observer is not None and observe_every < 1:
        raise ConfigurationError("observer requires observe_every >= 1")
    n = sim.steps if n_steps is None else n_steps
    if n < 0:
        raise ConfigurationError(f"n_steps must be >= 0, got {n}")

    engine_name, sums_fn = _resolve_engine(sim.engine)
    grad_fn = _maybe_fast_gradient(potential, engine_name)
    spec = kernel if kernel is not None else KernelSpec(
        epsilon=potential.period / 4, period=potential.period
    )
    runner = None
    if engine_name == "numba" and observer is None and sim.mode == "abf":
        from . import _fastpath

        runner = _fastpath.chunk_runner(potential, spec, sim)
    pos = ensemble.positions.copy()
    pos[:, 0] = wrap(pos[:, 0], potential.period)
    d = ensemble.dim
    chunk_cap = max(1, _CHUNK_BUDGET // max(ensemble.n * d, 1))
    done = 0
    while done < n:
        k = min(chunk_cap, n - done)
        if _noise_override is not None:
            noise = np.asarray(_noise_override, dtype=float)
            if noise.shape == (ensemble.n, d):
                noise = noise[None]
            if noise.shape != (k, ensemble.n, d):
                raise ConfigurationError(
                    f"noise override shape {noise.shape} != {(k, ensemble.n, d)}"
                )
        else:
            noise = _draw_noise(ensemble.streams, k, d)
        if runner is not None:
            pos = np.ascontiguousarray(pos)
            if accumulator is not None:
                status, particle, step_idx, used = runner(
                    pos, np.ascontiguousarray(noise), done,
                    accumulator.steps_seen, accumulator.grid,
                    accumulator.num, accumulator.den, accumulator.skip,
                    accumulator.every,
                )
            else:
                empty = np.empty(0)
                status, particle, step_idx, used = runner(
                    pos, np.ascontiguousarray(noise), done, 0, empty, empty,
                    empty, 0, 1,
                )
            if status == 1:
                raise StepError("non-finite force", particle=particle,
                                step=step_idx)
            if status == 2:
                raise StepError("non-finite position", particle=particle,
                                step=step_idx)
            if accumulator is not None:
                accumulator.steps_seen += k
                accumulator.steps_used += used
        else:
            for j in range(k):
                pos = _advance_positions(
                    pos, noise[j], potential, spec, sim, sums_fn,
                    accumulator=accumulator, step_index=done + j,
                    grad_fn=grad_fn,
                )
                s = done + j + 1
                if observer is not None and s % observe_every == 0:
                    view = pos.view()
                    view.flags.writeable = False
                    observer(s, ensemble.time + s * sim.dt, view)
        done += k
    return ParticleEnsemble(pos, ensemble.streams, ensemble.time + n * sim.dt)
