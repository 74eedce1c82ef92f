"""Numba-accelerated inner loops.

Importing this module requires numba; callers treat an ImportError as
"fast path unavailable". The routines mirror their numpy counterparts
in :mod:`abfsim.dynamics` and :mod:`abfsim.potentials`; results agree
up to floating-point summation order.
"""

from __future__ import annotations

import numba
import numpy as np
from numba import njit

from .kernels import bump_normalization
from .potentials import GaussianWellPotential


@njit(cache=True)
def _window_sums_sorted(qs, xs, vs, eps, c, period):
    """Kernel sums over the strict windows (q-eps, q+eps).

    Both qs and xs must be sorted ascending and wrapped to the
    fundamental interval; window membership is scanned with two
    monotone pointers over the three period shifts of the samples.
    """
    m = qs.size
    n = xs.size
    num = np.zeros(m)
    den = np.zeros(m)
    cnt = np.zeros(m, dtype=np.int64)
    for s in range(3):
        shift = (s - 1) * period
        lo = 0
        hi = 0
        for i in range(m):
            a = qs[i] - eps
            b = qs[i] + eps
            while lo < n and xs[lo] + shift <= a:
                lo += 1
            if hi < lo:
                hi = lo
            while hi < n and xs[hi] + shift < b:
                hi += 1
            acc_n = 0.0
            acc_d = 0.0
            for j in range(lo, hi):
                u = (qs[i] - xs[j] - shift) / eps
                t = 1.0 - u * u
                if t > 0.0:
                    w = c * np.exp(-1.0 / t) / eps
                    acc_d += w
                    acc_n += w * vs[j]
            num[i] += acc_n
            den[i] += acc_d
            cnt[i] += hi - lo
    return num, den, cnt


def sums_windows(query, xs, vs, spec):
    """Drop-in replacement for the numpy windowed kernel sums.

    ``query`` must be sorted ascending (the callers in ``advance`` always
    pass sorted arrays); ``xs``/``vs`` sorted samples and their values.
    """
    num, den, cnt = _window_sums_sorted(
        np.ascontiguousarray(query),
        np.ascontiguousarray(xs),
        np.ascontiguousarray(vs),
        spec.epsilon,
        bump_normalization(),
        spec.period,
    )
    if spec.alpha > 0:
        num += spec.alpha * vs.sum()
        den += spec.alpha * vs.size
    return num, den, cnt


@njit(cache=True)
def _gauss_quartic_gradient(pos, period, amps, centers, inv_w2,
                            q_axes, q_coeffs, q_centers, out):
    n, d = pos.shape
    k = amps.size
    for i in range(n):
        x1 = pos[i, 0]
        x1 = x1 - period * np.floor(x1 / period + 0.5)
        for j in range(d):
            out[i, j] = 0.0
        for g in range(k):
            e = 0.0
            for j in range(d):
                xj = x1 if j == 0 else pos[i, j]
                diff = xj - centers[g, j]
                e += diff * diff
            w = -2.0 * amps[g] * np.exp(-e * inv_w2[g]) * inv_w2[g]
            for j in range(d):
                xj = x1 if j == 0 else pos[i, j]
                out[i, j] += w * (xj - centers[g, j])
        for q in range(q_axes.size):
            j = q_axes[q]
            xj = x1 if j == 0 else pos[i, j]
            diff = xj - q_centers[q]
            out[i, j] += 4.0 * q_coeffs[q] * diff * diff * diff
    return out


def _term_arrays(potential):
    amps = np.ascontiguousarray(potential._amps)
    centers = np.ascontiguousarray(potential._centers)
    inv_w2 = np.ascontiguousarray(potential._inv_w2)
    q_axes = np.array([q.axis for q in potential.quartics], dtype=np.int64)
    q_coeffs = np.array([q.coeff for q in potential.quartics])
    q_centers = np.array([q.center for q in potential.quartics])
    return amps, centers, inv_w2, q_axes, q_coeffs, q_centers


def gradient_function(potential):
    """A jitted gradient closure for supported potentials, else None."""
    if not isinstance(potential, GaussianWellPotential):
        return None
    amps, centers, inv_w2, q_axes, q_coeffs, q_centers = _term_arrays(potential)
    period = potential.period

    def grad(pos):
        out = np.empty_like(pos)
        return _gauss_quartic_gradient(
            pos, period, amps, centers, inv_w2, q_axes, q_coeffs, q_centers, out
        )

    return grad


@njit(cache=True)
def _abf_chunk_gaussian(pos, noise, dt, beta, eps, alpha, c, period,
                        amps, centers, inv_w2, q_axes, q_coeffs, q_centers,
                        grid, acc_num, acc_den, step0, acc_step0, acc_on,
                        acc_skip, acc_every):
    """Run a whole chunk of biased steps without leaving compiled code.

    Mutates ``pos`` in place and, when ``acc_on``, adds the grid kernel
    sums of each elected pre-step state into ``acc_num``/``acc_den``
    (the accumulation schedule counts from ``acc_step0``). Returns
    (status, particle, step, used): status 0 on success, 1 for a
    non-finite force, 2 for a non-finite position; ``used`` counts
    accumulated steps.
    """
    k = noise.shape[0]
    n, d = pos.shape
    m = grid.size
    grad = np.empty((n, d))
    est = np.empty(n)
    scale = np.sqrt(2.0 * dt / beta)
    used = 0
    for s in range(k):
        step = step0 + s
        _gauss_quartic_gradient(pos, period, amps, centers, inv_w2,
                                q_axes, q_coeffs, q_centers, grad)
        order = np.argsort(pos[:, 0], kind="mergesort")
        xs = np.empty(n)
        vs = np.empty(n)
        for i in range(n):
            xs[i] = pos[order[i], 0]
            vs[i] = grad[order[i], 0]
        vsum = 0.0
        if alpha > 0.0:
            for i in range(n):
                vsum += vs[i]
        astep = acc_step0 + s
        if acc_on and astep >= acc_skip and (astep - acc_skip) % acc_every == 0:
            gnum, gden, _ = _window_sums_sorted(grid, xs, vs, eps, c, period)
            for i in range(m):
                acc_num[i] += gnum[i] + alpha * vsum
                acc_den[i] += gden[i] + alpha * n
            used += 1
        snum, sden, _ = _window_sums_sorted(xs, xs, vs, eps, c, period)
        for i in range(n):
            total = sden[i] + alpha * n
            if total > 0.0:
                est[order[i]] = (snum[i] + alpha * vsum) / total
            else:
                est[order[i]] = 0.0
        for i in range(n):
            f1 = -grad[i, 0] + est[i]
            if not np.isfinite(f1):
                return 1, i, step, used
            x1 = pos[i, 0] + dt * f1 + scale * noise[s, i, 0]
            pos[i, 0] = x1 - period * np.floor(x1 / period + 0.5)
            ok = np.isfinite(pos[i, 0])
            for j in range(1, d):
                fj = -grad[i, j]
                if not np.isfinite(fj):
                    return 1, i, step, used
                pos[i, j] += dt * fj + scale * noise[s, i, j]
                ok = ok and np.isfinite(pos[i, j])
            if not ok:
                return 2, i, step, used
    return 0, -1, step0 + k - 1, used


def chunk_runner(potential, spec, sim):
    """Fused chunk stepper for ABF on a Gaussian-quartic landscape;
    None when this combination is not supported."""
    if not isinstance(potential, GaussianWellPotential):
        return None
    if sim.mode != "abf":
        return None
    amps, centers, inv_w2, q_axes, q_coeffs, q_centers = _term_arrays(potential)
    c = bump_normalization()

    def run(pos, noise, step0, acc_step0, grid, acc_num, acc_den, acc_skip,
            acc_every):
        acc_on = grid.size > 0
        return _abf_chunk_gaussian(
            pos, noise, sim.dt, sim.beta, spec.epsilon, spec.alpha, c,
            potential.period, amps, centers, inv_w2, q_axes, q_coeffs,
            q_centers, grid, acc_num, acc_den, step0, acc_step0, acc_on,
            acc_skip, acc_every,
        )

    return run
