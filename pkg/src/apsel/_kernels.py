"""Numba Monte Carlo kernels for the annealing samplers.

Every read owns a counter-based PRNG stream derived from (seed, read index),
and every proposal consumes exactly one uniform draw whether or not it is
accepted. Results are therefore bit-identical across runs and across thread
counts: threads only decide which core executes a read, never what the read
computes.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

U64 = np.uint64
# splitmix64 increment and finalizer multipliers
_GOLDEN = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# exp(-45) < 2**-53: past this point only a literal 0.0 draw can accept,
# so skip the exp call while still consuming the uniform.
_EXP_ARG_CUTOFF = 45.0


@njit(cache=True, inline="always")
def _finalize(z):
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _stream_init(seed, read):
    return _finalize(seed ^ (U64(read + 1) * _GOLDEN))


@njit(cache=True, inline="always")
def _next_uniform(state):
    state = state + _GOLDEN
    z = _finalize(state)
    return state, (z >> U64(11)) * _INV53


@njit(cache=True)
def rng_stream(seed, read, count):
    """First `count` uniforms of one read's stream (test hook)."""
    out = np.empty(count, np.float64)
    state = _stream_init(seed, read)
    for t in range(count):
        state, u = _next_uniform(state)
        out[t] = u
    return out


@njit(cache=True, inline="always")
def _metropolis_accepts(delta, beta, u):
    if delta <= 0.0:
        return True
    arg = beta * delta
    if arg <= _EXP_ARG_CUTOFF:
        return u < np.exp(-arg)
    return u == 0.0


@njit(cache=True, parallel=True)
def sa_kernel(linear, w, betas, seed, out):
    """Single-bit-flip Metropolis over the binary model, one row per read.

    Each read starts from a random bitvector and performs one pass over all
    variables per sweep, with the inverse temperature following `betas`.
    Local fields f[i] = linear[i] + sum_j w[i, j] x[j] make a flip's energy
    change (1 - 2 x[i]) * f[i]; an accepted flip updates f in O(n).
    """
    num_reads, n = out.shape
    num_sweeps = betas.shape[0]
    for r in prange(num_reads):
        state = _stream_init(seed, r)
        x = np.zeros(n, np.uint8)
        f = linear.copy()
        for i in range(n):
            state, u = _next_uniform(state)
            if u < 0.5:
                x[i] = 1
                for j in range(n):
                    f[j] += w[i, j]
        for t in range(num_sweeps):
            beta = betas[t]
            for i in range(n):
                state, u = _next_uniform(state)
                delta = (1.0 - 2.0 * x[i]) * f[i]
                if _metropolis_accepts(delta, beta, u):
                    if x[i] == 0:
                        x[i] = 1
                        for j in range(n):
                            f[j] += w[i, j]
                    else:
                        x[i] = 0
                        for j in range(n):
                            f[j] -= w[i, j]
        for i in range(n):
            out[r, i] = x[i]


@njit(cache=True, parallel=True)
def sqa_kernel(h, jmat, beta, jperp, trotter_slices, seed, out):
    """Path-integral Monte Carlo on the spin model, one row per read.

    The replicated system couples each spin to its copies in the adjacent
    imaginary-time slices (periodic ring; with two slices both ring bonds
    join the same pair, doubling the coupling). Intra-slice energy is scaled
    by 1/P, the slice coupling per sweep comes precomputed in `jperp`, and
    acceptance uses the full inverse temperature `beta`. The returned
    bitvector is the slice with the lowest unscaled spin-model energy after
    the final sweep, lowest slice index winning ties.
    """
    num_reads, n = out.shape
    num_sweeps = jperp.shape[0]
    p_slices = trotter_slices
    inv_p = 1.0 / p_slices
    for r in prange(num_reads):
        state = _stream_init(seed, r)
        s = np.empty((p_slices, n), np.float64)
        for p in range(p_slices):
            for i in range(n):
                state, u = _next_uniform(state)
                s[p, i] = 1.0 if u < 0.5 else -1.0
        fields = np.empty((p_slices, n), np.float64)
        for p in range(p_slices):
            for i in range(n):
                acc = h[i]
                for j in range(n):
                    acc += jmat[i, j] * s[p, j]
                fields[p, i] = acc
        for t in range(num_sweeps):
            jp = jperp[t]
            for p in range(p_slices):
                up = p + 1 if p + 1 < p_slices else 0
                dn = p - 1 if p >= 1 else p_slices - 1
                for i in range(n):
                    state, u = _next_uniform(state)
                    si = s[p, i]
                    ring = s[up, i] + s[dn, i]
                    delta = -2.0 * si * fields[p, i] * inv_p + 2.0 * jp * si * ring
                    if _metropolis_accepts(delta, beta, u):
                        flipped = -si
                        s[p, i] = flipped
                        step = 2.0 * flipped
                        for j in range(n):
                            fields[p, j] += step * jmat[i, j]
        best_energy = np.inf
        best_p = 0
        for p in range(p_slices):
            energy = 0.0
            for i in range(n):
                energy += 0.5 * s[p, i] * (fields[p, i] + h[i])
            if energy < best_energy:
                best_energy = energy
                best_p = p
        for i in range(n):
            out[r, i] = 1 if s[best_p, i] > 0.0 else 0
