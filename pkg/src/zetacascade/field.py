"""The prime-phase random field, its truncations, and overlaps.

The field at a point h in [0, 1] is

    X_h = sum over primes p <= T of cos(theta_p - h*log p) / sqrt(p),

with i.i.d. uniform phases theta_p.  Truncation level alpha keeps only
primes up to exp((log T)**alpha).  The overlap of two points is the
correlation of the field values, which depends only on |h - h'|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, _streams
from .primes import PrimeSet, cutoff_for_alpha, sieve

MIN_GRID = 1024
OVERSAMPLE = 16  # grid points per unit of bandwidth log(T)


def default_grid_size(T: float) -> int:
    """Grid size oversampling the field bandwidth log(T) by 16x."""
    return max(MIN_GRID, int(math.ceil(OVERSAMPLE * math.log(T))))


@dataclass(frozen=True)
class DisorderSample:
    """One realization of the uniform phases over a prime set.

    Phase i is a pure function of (seed, i), so the same seed extends to
    a bigger prime set without changing the shared prefix.
    """

    prime_set: PrimeSet
    phases: np.ndarray
    seed: int


@dataclass(frozen=True)
class FieldGrid:
    """Field values on the uniform grid h_j = j/n_grid, one row per alpha."""

    T: float
    alphas: tuple[float, ...]
    n_grid: int
    values: np.ndarray  # shape (len(alphas), n_grid)
    seed: int

    @property
    def h(self) -> np.ndarray:
        return np.arange(self.n_grid) / self.n_grid

    def values_for(self, alpha: float) -> np.ndarray:
        for i, a in enumerate(self.alphas):
            if a == alpha:
                return self.values[i]
        raise KeyError(f"alpha={alpha} not in grid alphas {self.alphas}")


def sample_disorder(primes: PrimeSet, seed: int) -> DisorderSample:
    """Draw the phases for every prime in the set; deterministic per seed."""
    phases = _streams.phase_stream(seed, 0, len(primes))
    return DisorderSample(prime_set=primes, phases=phases, seed=int(seed))


def evaluate_field(
    disorder: DisorderSample, alphas, n_grid: int | None = None
) -> FieldGrid:
    """Evaluate the truncated fields at every grid point.

    The prime range is split at the alpha cutoffs and each segment is
    summed once; row k is the cumulative sum of segments up to cutoff k,
    so nesting across truncation levels is exact by construction.
    """
    alphas = tuple(float(a) for a in alphas)
    if not alphas:
        raise ValueError("need at least one alpha")
    if any(not 0.0 <= a <= 1.0 for a in alphas):
        raise ValueError(f"alphas must lie in [0, 1], got {alphas}")
    if list(alphas) != sorted(set(alphas)):
        raise ValueError(f"alphas must be sorted and unique, got {alphas}")
    T = disorder.prime_set.limit
    if n_grid is None:
        n_grid = default_grid_size(T)
    if n_grid < 1:
        raise ValueError(f"n_grid must be >= 1, got {n_grid}")

    primes = disorder.prime_set.primes
    # alpha = 1 means the whole prime set; only proper truncations need T > e
    cuts = [float(T) if a == 1.0 else cutoff_for_alpha(T, a) for a in alphas]
    bounds = [int(np.searchsorted(primes, math.floor(c), side="right")) for c in cuts]

    values = np.zeros((len(alphas), n_grid))
    acc = np.zeros(n_grid)
    lo = 0
    for k, hi in enumerate(bounds):
        if hi > lo:
            p = primes[lo:hi].astype(np.float64)
            seg = _kernels.phasor_grid_sum(
                disorder.phases[lo:hi], np.log(p), 1.0 / np.sqrt(p), 1.0 / n_grid, n_grid
            )
            acc = acc + seg
            lo = hi
        values[k] = acc
    return FieldGrid(T=T, alphas=alphas, n_grid=n_grid, values=values, seed=disorder.seed)


def variance_of_truncation(primes: PrimeSet, alpha_cutoff: float) -> float:
    """sum of 1/(2p) over primes p <= alpha_cutoff; the h-independent variance."""
    p = primes.prefix(alpha_cutoff).primes
    if p.size == 0:
        return 0.0
    return float(np.sum(0.5 / p.astype(np.float64)))


def covariance_truncated(
    h: float, h2: float, alpha: float, T: float, primes: PrimeSet
) -> float:
    """Covariance of the level-alpha field at two points, by direct summation."""
    _check_unit(h, "h")
    _check_unit(h2, "h2")
    p = primes.prefix(cutoff_for_alpha(T, alpha)).primes.astype(np.float64)
    if p.size == 0:
        return 0.0
    return float(np.sum(np.cos(abs(h - h2) * np.log(p)) * (0.5 / p)))


def overlap_exact(h: float, h2: float, T: float, primes: PrimeSet) -> float:
    """Correlation of the full field at two points (exact prime sum)."""
    if h == h2:
        return 1.0
    cov = covariance_truncated(h, h2, 1.0, T, primes)
    var = variance_of_truncation(primes, T)
    if var == 0.0:
        raise ValueError("prime set is empty; overlap undefined")
    return cov / var


def overlap_asymptotic(h: float, h2: float, T: float) -> float:
    """Prime-number-theorem approximation of the overlap, clamped to [0, 1]."""
    _check_unit(h, "h")
    _check_unit(h2, "h2")
    if h == h2:
        raise ValueError("h == h2: the exact overlap is 1, no asymptotic needed")
    if T <= math.exp(math.e):
        raise ValueError(f"T must exceed e**e, got {T}")
    log_t = math.log(T)
    value = math.log(min(log_t, 1.0 / abs(h - h2))) / math.log(log_t)
    return min(max(value, 0.0), 1.0)


def overlap_grid_table(T: float, n_grid: int, primes: PrimeSet | None = None) -> np.ndarray:
    """Exact overlaps at grid separations k/n_grid, k = 0..n_grid-1.

    Entry 0 is exactly 1; entries can be negative at large separations.
    """
    if primes is None:
        primes = sieve(T)
    p = primes.prefix(T).primes.astype(np.float64)
    if p.size == 0:
        raise ValueError("no primes <= T; overlap table undefined")
    cov = _kernels.phasor_grid_sum(
        np.zeros(p.size), np.log(p), 0.5 / p, 1.0 / n_grid, n_grid
    )
    return cov / cov[0]


def save_phase_cache(path: str, disorder: DisorderSample) -> None:
    """Binary phase cache keyed by seed (npz: seed, limit, phases)."""
    np.savez_compressed(
        path,
        seed=np.int64(disorder.seed),
        limit=np.float64(disorder.prime_set.limit),
        phases=disorder.phases,
    )


def load_phase_cache(path: str) -> DisorderSample:
    with np.load(path) as data:
        seed = int(data["seed"])
        limit = float(data["limit"])
        phases = data["phases"]
    ps = sieve(limit)
    if len(ps) != phases.size:
        raise ValueError(
            f"phase cache {path!r} holds {phases.size} phases but {len(ps)} primes <= {limit:g}"
        )
    return DisorderSample(prime_set=ps, phases=phases, seed=seed)


def _check_unit(x: float, name: str) -> None:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")


# Per-(T, seed) grids are reused heavily by the Monte Carlo drivers; the
# arrays are tiny (n_grid doubles per alpha) so a plain dict cache is fine.
_grid_cache: dict[tuple, FieldGrid] = {}
_rho_cache: dict[tuple, np.ndarray] = {}
_GRID_SLOTS = 512


def cached_field_grid(T: float, seed: int, alphas, n_grid: int | None = None) -> FieldGrid:
    alphas = tuple(float(a) for a in alphas)
    if n_grid is None:
        n_grid = default_grid_size(T)
    key = (float(T), int(seed), alphas, int(n_grid))
    grid = _grid_cache.get(key)
    if grid is not None:
        return grid
    # a cached grid holding a superset of truncation levels can be sliced;
    # nesting makes the shared rows identical either way
    for (cT, cseed, calphas, cn), cached in _grid_cache.items():
        if cT == key[0] and cseed == key[1] and cn == key[3] and set(alphas) <= set(calphas):
            rows = [calphas.index(a) for a in alphas]
            grid = FieldGrid(T=cached.T, alphas=alphas, n_grid=cached.n_grid,
                             values=cached.values[rows], seed=cached.seed)
            _grid_cache[key] = grid
            return grid
    if len(_grid_cache) >= _GRID_SLOTS:
        _grid_cache.clear()
    grid = evaluate_field(sample_disorder(sieve(T), seed), alphas, n_grid)
    _grid_cache[key] = grid
    return grid


def cached_overlap_table(T: float, n_grid: int) -> np.ndarray:
    key = (float(T), int(n_grid))
    tab = _rho_cache.get(key)
    if tab is None:
        tab = overlap_grid_table(T, n_grid)
        _rho_cache[key] = tab
    return tab


def clear_field_cache() -> None:
    _grid_cache.clear()
    _rho_cache.clear()
