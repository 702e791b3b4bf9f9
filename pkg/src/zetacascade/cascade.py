"""Exact sampler and moment engine for the Poisson-Dirichlet limit object.

A sample of parameter theta in (0, 1) is the decreasing normalization of
the atoms of a Poisson random measure on (0, inf) with intensity
theta * x**(-theta-1) dx.  Atoms are generated largest-first as
Gamma_k**(-1/theta) with Gamma_k the arrival times of a unit-rate Poisson
process, so the decreasing order is automatic.  Generation stops once the
expected mass below the running cutoff c, theta * c**(1-theta) / (1-theta),
drops under tail_tol times the retained mass; that expected tail is added
to the normalizer instead of simulating the tiny atoms.

Replica functionals of a sample reduce to power sums of the weights via
set-partition sums, evaluated exactly; the retained-mass deficit is
carried entirely by the first power sum, which equals 1 for the full
object, so constant functionals stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import pd_power_sums
from ._streams import mix64, uniform_stream
from .estimates import MCEstimate, aggregate_abs, mc_aggregate
from .functionals import (
    TABLE,
    OverlapFunctionalSpec,
    exact_pattern_sums,
    pair_order,
    partition_structure,
)

DEFAULT_TAIL_TOL = 1e-4
DEFAULT_N_SAMPLES = 10_000
MAX_ATOMS = 10**6
MAX_THETA = 0.95  # theta -> 1 needs astronomically many atoms

_CHUNK = 4096


@dataclass(frozen=True)
class PDWeights:
    """Truncated decreasing Poisson-Dirichlet weight vector.

    sum(weights) + tail_mass_bound = 1 by construction; the bound is the
    expected relative mass of the atoms below the truncation cutoff.
    """

    theta: float
    weights: np.ndarray
    tail_mass_bound: float
    seed: int


def _check_theta(theta: float) -> None:
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if theta > MAX_THETA:
        raise ValueError(
            f"theta={theta} too close to 1: the truncated atom count would "
            f"explode; supported range is (0, {MAX_THETA}]"
        )


def _check_tail_tol(tail_tol: float) -> None:
    if not 0.0 < tail_tol <= 1e-3:
        raise ValueError(f"tail_tol must lie in (0, 1e-3], got {tail_tol}")


def sample_pd(
    theta: float, seed: int, tail_tol: float = DEFAULT_TAIL_TOL, index: int = 0
) -> PDWeights:
    """One truncated Poisson-Dirichlet sample.

    index selects a substream, matching sample index of the batched
    moment kernel for the same seed.
    """
    _check_theta(theta)
    _check_tail_tol(tail_tol)
    key = mix64(seed, index)
    inv_theta = 1.0 / theta
    tail_coeff = theta / (1.0 - theta)
    tail_exponent = -(1.0 - theta) * inv_theta
    atoms: list[np.ndarray] = []
    gamma_last = 0.0
    s1 = 0.0
    pos = 0
    tail = math.inf
    while True:
        u = uniform_stream(key, pos, _CHUNK)
        pos += _CHUNK
        gammas = gamma_last + np.cumsum(-np.log1p(-u))
        chunk_atoms = gammas**(-inv_theta)
        running = s1 + np.cumsum(chunk_atoms)
        tails = tail_coeff * gammas**tail_exponent
        done = tails < tail_tol * running
        total_before = sum(a.size for a in atoms)
        cut = int(np.argmax(done)) + 1 if done.any() else _CHUNK
        cut = min(cut, MAX_ATOMS - total_before)
        atoms.append(chunk_atoms[:cut])
        s1 = float(running[cut - 1])
        tail = float(tails[cut - 1])
        gamma_last = float(gammas[cut - 1])
        if done.any() or total_before + cut >= MAX_ATOMS:
            break
    all_atoms = np.concatenate(atoms)
    denom = s1 + tail
    return PDWeights(
        theta=theta,
        weights=all_atoms / denom,
        tail_mass_bound=tail / denom,
        seed=int(seed),
    )


_power_cache: dict[tuple, np.ndarray] = {}
_pattern_cache: dict[tuple, list[np.ndarray]] = {}


def _cached_pattern_sums(key: tuple, n_elements: int, q: np.ndarray) -> list[np.ndarray]:
    full_key = key + (n_elements,)
    sums = _pattern_cache.get(full_key)
    if sums is None:
        if len(_pattern_cache) >= 32:
            _pattern_cache.clear()
        sums = exact_pattern_sums(n_elements, q)
        _pattern_cache[full_key] = sums
    return sums


def _power_sum_table(
    theta: float, n_samples: int, seed: int, tail_tol: float, m_max: int
) -> np.ndarray:
    """Per-sample normalized power sums q_m, shape (n_samples, m_max).

    Column 0 is q_1 = 1 exactly: the truncated tail carries its full
    first-power mass through the compensated normalizer, while its
    contribution to higher power sums is negligible by construction.
    """
    _check_theta(theta)
    _check_tail_tol(tail_tol)
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    key = (float(theta), int(n_samples), int(seed), float(tail_tol))
    cached = _power_cache.get(key)
    if cached is None or cached.shape[1] < m_max:
        if len(_power_cache) >= 8:
            _power_cache.clear()
        raw = pd_power_sums(
            theta, n_samples, np.uint64(seed & 0xFFFFFFFFFFFFFFFF), tail_tol,
            MAX_ATOMS, max(m_max, 2),
        )
        raw[:, 0] = 1.0
        _power_cache[key] = raw
        cached = raw
    return cached[:, :m_max]


def clear_power_cache() -> None:
    _power_cache.clear()
    _pattern_cache.clear()


def pd_moment_closed_form(theta: float, m: int) -> float:
    """E[sum of weights**m] for the full object: product of (j-theta)/j.

    Built by the add-one-replica recursion M_{m+1} = M_m * (m-theta)/m
    starting from M_2 = 1-theta.
    """
    if m < 2:
        raise ValueError(f"moment order must be >= 2, got {m}")
    value = 1.0 - theta
    for j in range(2, m):
        value *= (j - theta) / j
    return value


def pd_power_moment(
    theta: float,
    m: int,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = 0,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> MCEstimate:
    """Monte Carlo estimate of E[sum of weights**m], m >= 2."""
    if m < 2:
        raise ValueError(f"moment order must be >= 2, got {m}")
    q = _power_sum_table(theta, n_samples, seed, tail_tol, m)
    return mc_aggregate(q[:, m - 1], 1, seed)


def _phi_of_partitions(phi: OverlapFunctionalSpec, n_elements: int):
    """phi evaluated on the binary overlap pattern of each partition of
    {0..n_elements-1}, restricted to the first phi.s replicas."""
    parts, _ = partition_structure(n_elements)
    pairs = pair_order(phi.s)
    values = np.empty(len(parts))
    for i, part in enumerate(parts):
        block_of = {}
        for bi, block in enumerate(part):
            for e in block:
                block_of[e] = bi
        bits = 0
        for j, (a, b) in enumerate(pairs):
            if block_of[a] == block_of[b]:
                bits |= 1 << j
        values[i] = phi.table[bits]
    return values


def pd_overlap_functional(
    theta: float,
    phi: OverlapFunctionalSpec,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = 0,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> MCEstimate:
    """E[sum over s-tuples of atoms of the weight product times phi of the
    coincidence pattern] -- the cascade side of the replica functionals.

    Computed exactly per sample by set-partition sums over power sums.
    """
    if phi.kind != TABLE:
        raise ValueError("cascade overlaps are exactly 0/1; phi must be tabulated")
    key = (float(theta), int(n_samples), int(seed), float(tail_tol))
    q = _power_sum_table(theta, n_samples, seed, tail_tol, phi.s)
    pattern_sums = _cached_pattern_sums(key, phi.s, q)
    phi_vals = _phi_of_partitions(phi, phi.s)
    values = np.zeros(n_samples)
    for v, sums in zip(phi_vals, pattern_sums):
        values += v * sums
    return mc_aggregate(values, 1, seed)


def _psi_pair_values(psi, partition_values):
    psi0, psi1 = float(psi[0]), float(psi[1])
    return psi0 + (psi1 - psi0) * partition_values


def gg_residual_pd(
    theta: float,
    s: int,
    k: int,
    psi,
    phi: OverlapFunctionalSpec,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = 0,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> MCEstimate:
    """Residual of the cascade identity linking a new replica's overlap to
    the existing ones:

        E[psi(R_{k,s+1}) phi] - (1/s) E[psi(R_12)] E[phi]
                              - (1/s) sum_{l != k} E[psi(R_{k,l}) phi]

    psi is a pair (psi(0), psi(1)).  All three terms are computed from the
    same samples; a constant psi cancels exactly, and for the true object
    the residual is zero, so the estimate is pure Monte Carlo noise.
    """
    if not 1 <= k <= s:
        raise ValueError(f"k must lie in 1..{s}, got {k}")
    if phi.s != s:
        raise ValueError(f"functional is for s={phi.s}, requested s={s}")
    if phi.kind != TABLE:
        raise ValueError("cascade overlaps are exactly 0/1; phi must be tabulated")
    key = (float(theta), int(n_samples), int(seed), float(tail_tol))
    q = _power_sum_table(theta, n_samples, seed, tail_tol, s + 1)
    t1, psi_b, phi_b, t3 = _gg_terms(
        q, s, k, psi, phi,
        sums_ext=_cached_pattern_sums(key, s + 1, q),
        sums_s=_cached_pattern_sums(key, s, q),
    )
    # product of expectations, linearized so the stderr tracks the residual
    psi_mean = psi_b.mean()
    phi_mean = phi_b.mean()
    r = t1 - (psi_b * phi_mean + psi_mean * phi_b - psi_mean * phi_mean) / s - t3
    return aggregate_abs(r, 1, seed)


def _gg_terms(q: np.ndarray, s: int, k: int, psi, phi: OverlapFunctionalSpec,
              sums_ext=None, sums_s=None):
    """Per-sample values of the three identity terms, from power sums.

    Returns (t1, psi_pair, phi_value, t3): the extended (s+1)-replica
    expectation, the two-replica psi average, the s-replica phi value and
    the within-group psi-phi average (already divided by s).
    """
    psi0, psi1 = float(psi[0]), float(psi[1])
    n_samples = q.shape[0]

    parts_ext, _ = partition_structure(s + 1)
    if sums_ext is None:
        sums_ext = exact_pattern_sums(s + 1, q)
    phi_ext = _phi_of_partitions(phi, s + 1)
    t1 = np.zeros(n_samples)
    for part, phi_v, sums in zip(parts_ext, phi_ext, sums_ext):
        block_of = {}
        for bi, block in enumerate(part):
            for e in block:
                block_of[e] = bi
        same = block_of[k - 1] == block_of[s]
        t1 += (psi1 if same else psi0) * phi_v * sums

    # pair average of psi: psi0 + (psi1 - psi0) * P(two replicas coincide)
    psi_b = psi0 + (psi1 - psi0) * q[:, 1]

    parts_s, _ = partition_structure(s)
    if sums_s is None:
        sums_s = exact_pattern_sums(s, q)
    phi_s = _phi_of_partitions(phi, s)
    phi_b = np.zeros(n_samples)
    t3 = np.zeros(n_samples)
    for part, phi_v, sums in zip(parts_s, phi_s, sums_s):
        block_of = {}
        for bi, block in enumerate(part):
            for e in block:
                block_of[e] = bi
        phi_b += phi_v * sums
        for l in range(1, s + 1):
            if l != k:
                same = block_of[k - 1] == block_of[l - 1]
                t3 += (psi1 if same else psi0) * phi_v * sums
    t3 /= s
    return t1, psi_b, phi_b, t3
