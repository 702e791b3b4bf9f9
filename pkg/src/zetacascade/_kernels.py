"""Numba kernels for the two hot loops: trigonometric prime sums and
Poisson-Dirichlet atom generation.

Both kernels parallelize over fixed-size work units and reduce the partial
results in a deterministic order, so outputs are bit-identical for any
thread count.
"""

from __future__ import annotations

import os
import warnings

import numba
import numpy as np
from numba import njit, prange

# the fallback workqueue layer is fine; silence the advisory
warnings.filterwarnings("ignore", message="The TBB threading layer requires TBB")

PRIME_BLOCK = 1 << 16  # primes per work unit; compensated sum across blocks
RENORM_STEPS = 1 << 12  # phasor modulus renormalization interval

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / float(1 << 53)


def resolve_threads(requested: int | None = None) -> int:
    """Pick the worker count: flag, else ZC_THREADS, else all cores."""
    if requested is None:
        env = os.environ.get("ZC_THREADS", "")
        requested = int(env) if env else numba.config.NUMBA_NUM_THREADS
    n = max(1, min(int(requested), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


@njit(cache=True)
def _kahan_reduce(partial, out):
    n_blocks, n_grid = partial.shape
    for j in range(n_grid):
        acc = 0.0
        c = 0.0
        for b in range(n_blocks):
            y = partial[b, j] - c
            t = acc + y
            c = (t - acc) - y
            acc = t
        out[j] = acc


@njit(parallel=True, cache=True)
def phasor_grid_sum(theta, log_p, amp, dh, n_grid):
    """sum_p amp[p] * cos(theta[p] - j*dh*log_p[p]) for j = 0..n_grid-1.

    One phasor per prime, advanced by complex multiplication across the
    grid; renormalized to |z| = amp every RENORM_STEPS steps to stop drift.
    """
    n_primes = theta.shape[0]
    n_blocks = (n_primes + PRIME_BLOCK - 1) // PRIME_BLOCK
    partial = np.zeros((n_blocks, n_grid))
    for b in prange(n_blocks):
        lo = b * PRIME_BLOCK
        hi = min(lo + PRIME_BLOCK, n_primes)
        m = hi - lo
        zr = np.empty(m)
        zi = np.empty(m)
        wr = np.empty(m)
        wi = np.empty(m)
        for i in range(m):
            zr[i] = amp[lo + i] * np.cos(theta[lo + i])
            zi[i] = amp[lo + i] * np.sin(theta[lo + i])
            a = dh * log_p[lo + i]
            wr[i] = np.cos(a)
            wi[i] = -np.sin(a)
        for j in range(n_grid):
            s = 0.0
            for i in range(m):
                s += zr[i]
                tr = zr[i] * wr[i] - zi[i] * wi[i]
                zi[i] = zr[i] * wi[i] + zi[i] * wr[i]
                zr[i] = tr
            partial[b, j] = s
            if (j + 1) % RENORM_STEPS == 0:
                for i in range(m):
                    scale = amp[lo + i] / np.sqrt(zr[i] * zr[i] + zi[i] * zi[i])
                    zr[i] *= scale
                    zi[i] *= scale
    out = np.empty(n_grid)
    _kahan_reduce(partial, out)
    return out


@njit(inline="always")
def _finalize64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(inline="always")
def _mix_stream(key, counter):
    # matches _streams.uniform_stream with base key precomputed
    z = _finalize64(key + (counter + np.uint64(1)) * _GOLDEN)
    return np.float64(z >> np.uint64(11)) * _INV_2_53


@njit(inline="always")
def _mix_key(seed, index):
    # matches _streams.mix64(seed, index) followed by the stream base mix
    s = _finalize64(seed * _GOLDEN + _GOLDEN)
    s = _finalize64((s + index) * _GOLDEN + _GOLDEN)
    return _finalize64(s * _GOLDEN + _GOLDEN)


@njit(parallel=True, cache=True)
def pd_power_sums(theta, n_samples, seed, tail_tol, max_atoms, m_max):
    """Normalized power sums of truncated Poisson-Dirichlet samples.

    Returns (n_samples, m_max) where column 0 is the retained weight mass
    sum(w) and column m-1 is q_m = sum(w**m) for m = 2..m_max.  Atoms are
    arrival times of a unit-rate Poisson process raised to -1/theta;
    generation stops once the expected mass below the cutoff drops under
    tail_tol times the retained mass (or at max_atoms), and that expected
    tail is added to the normalizer.
    """
    out = np.zeros((n_samples, m_max))
    inv_theta = 1.0 / theta
    tail_exponent = -(1.0 - theta) * inv_theta
    tail_coeff = theta / (1.0 - theta)
    for i in prange(n_samples):
        key = _mix_key(np.uint64(seed), np.uint64(i))
        gamma = 0.0
        s1 = 0.0
        pm = np.zeros(m_max - 1)
        ctr = np.uint64(0)
        n_atoms = 0
        tail = 0.0
        while True:
            u = _mix_stream(key, ctr)
            ctr += np.uint64(1)
            gamma += -np.log1p(-u)
            eta = gamma ** (-inv_theta)
            s1 += eta
            p = eta * eta
            pm[0] += p
            for m in range(3, m_max + 1):
                p *= eta
                pm[m - 2] += p
            n_atoms += 1
            tail = tail_coeff * gamma**tail_exponent
            if tail < tail_tol * s1 or n_atoms >= max_atoms:
                break
        denom = s1 + tail
        out[i, 0] = s1 / denom
        scale = denom * denom
        for m in range(2, m_max + 1):
            out[i, m - 1] = pm[m - 2] / scale
            scale *= denom
    return out
