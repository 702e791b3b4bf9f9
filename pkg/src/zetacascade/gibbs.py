"""Gibbs measures on the field grid: weights, replica sampling, and
disorder-averaged overlap statistics.

The measure at inverse temperature beta weights grid point j by
exp(beta * X_j), optionally perturbed by u times a truncated field.  The
critical temperature separating the spread-out phase from the condensed
one is beta = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from . import field as field_mod
from ._streams import ROLE_DISORDER, ROLE_REPLICA, mix64, substream_rng
from .estimates import MCEstimate, aggregate_abs, mc_aggregate
from .functionals import CALLABLE, TABLE, OverlapFunctionalSpec, pair_order

CRITICAL_BETA = 2.0
DEFAULT_EPSILON = 0.2
DEFAULT_N_DISORDER = 64
DEFAULT_N_DRAWS = 10_000


@dataclass(frozen=True)
class GibbsWeights:
    """Normalized Boltzmann weights over the grid.

    log_normalizer is log of (1/N) * sum exp(beta*(u*X(alpha) + X)); with
    u = 0 the weights reduce to the unperturbed measure.
    """

    beta: float
    u: float
    alpha: float | None
    weights: np.ndarray
    log_normalizer: float


def gibbs_weights(
    grid: field_mod.FieldGrid, beta: float, u: float = 0.0, alpha: float | None = None
) -> GibbsWeights:
    """Boltzmann weights on the grid, computed max-shifted."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if u <= -1.0:
        raise ValueError(f"perturbation u must exceed -1, got {u}")
    x = grid.values_for(1.0)
    if u != 0.0:
        if alpha is None:
            raise ValueError("a truncation level alpha is required when u != 0")
        x = u * grid.values_for(alpha) + x
    a = beta * x
    m = float(a.max())
    shifted = np.exp(a - m)
    total = float(shifted.sum())
    weights = shifted / total
    log_normalizer = m + math.log(total / grid.n_grid)
    return GibbsWeights(beta=beta, u=u, alpha=alpha, weights=weights, log_normalizer=log_normalizer)


def sample_replicas(w: GibbsWeights, s: int, n_draws: int, seed: int) -> np.ndarray:
    """n_draws independent s-tuples of grid indices, each entry i.i.d. from w."""
    if s < 1 or n_draws < 1:
        raise ValueError("s and n_draws must be >= 1")
    rng = substream_rng(seed, ROLE_REPLICA, 0)
    return _draw_indices(rng, np.cumsum(w.weights), n_draws, s)


def _draw_indices(rng: np.random.Generator, cumw: np.ndarray, n_draws: int, s: int) -> np.ndarray:
    u = rng.random((n_draws, s))
    idx = np.searchsorted(cumw, u, side="right")
    return np.minimum(idx, cumw.size - 1)


class DisorderState(NamedTuple):
    index: int
    grid: field_mod.FieldGrid
    weights: GibbsWeights
    rng: np.random.Generator


def disorder_states(
    T: float,
    beta: float,
    n_disorder: int,
    seed_base: int,
    alphas=(1.0,),
    n_grid: int | None = None,
) -> Iterator[DisorderState]:
    """The per-realization Gibbs systems behind every disorder average.

    Disorder seeds depend only on (seed_base, index), not on T, so runs at
    different T extend the same phase realizations; trend comparisons
    across T are then positively coupled.
    """
    for i in range(n_disorder):
        dseed = mix64(seed_base, ROLE_DISORDER, i)
        grid = field_mod.cached_field_grid(T, dseed, alphas, n_grid)
        w = gibbs_weights(grid, beta)
        rng = substream_rng(seed_base, ROLE_REPLICA, i)
        yield DisorderState(index=i, grid=grid, weights=w, rng=rng)


def _pair_overlaps(rho_table: np.ndarray, idx: np.ndarray, s: int) -> np.ndarray:
    """Signed exact overlaps for every replica pair, shape (n_draws, n_pairs)."""
    cols = []
    for a, b in pair_order(s):
        cols.append(rho_table[np.abs(idx[:, a] - idx[:, b])])
    return np.column_stack(cols)


def _functional_values(phi: OverlapFunctionalSpec, rho_table: np.ndarray, idx: np.ndarray, epsilon: float):
    """Evaluate a functional on the overlaps of sampled replica tuples.

    Tabulated kinds are band-rounded; draws with a mid-band overlap are
    flagged invalid.  With s = 1 there are no overlaps and the functional
    is a constant.
    """
    n_draws = idx.shape[0]
    if phi.s == 1:
        if phi.kind == TABLE:
            vals = np.full(n_draws, phi.table[0])
        else:
            vals = phi.evaluate_real(np.empty((n_draws, 0)))
        return vals, np.ones(n_draws, dtype=bool)
    overlaps = _pair_overlaps(rho_table, idx, phi.s)
    if phi.kind == CALLABLE:
        return phi.evaluate_real(overlaps), np.ones(n_draws, dtype=bool)
    return phi.band_round(overlaps, epsilon)


class BandMasses(NamedTuple):
    low: MCEstimate
    middle: MCEstimate
    high: MCEstimate


def two_overlap_histogram(
    T: float,
    beta: float,
    epsilon: float = DEFAULT_EPSILON,
    n_disorder: int = DEFAULT_N_DISORDER,
    n_draws: int = DEFAULT_N_DRAWS,
    seed: int = 0,
    n_grid: int | None = None,
) -> BandMasses:
    """Mass of the two-overlap distribution in the bands
    [min, eps), [eps, 1-eps], (1-eps, 1]; overlaps keep their sign."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    n = n_grid or field_mod.default_grid_size(T)
    rho = field_mod.cached_overlap_table(T, n)
    low_b = np.empty(n_disorder)
    mid_b = np.empty(n_disorder)
    high_b = np.empty(n_disorder)
    for st in disorder_states(T, beta, n_disorder, seed, (1.0,), n):
        idx = _draw_indices(st.rng, np.cumsum(st.weights.weights), n_draws, 2)
        r = rho[np.abs(idx[:, 0] - idx[:, 1])]
        low_b[st.index] = np.mean(r < epsilon)
        high_b[st.index] = np.mean(r > 1.0 - epsilon)
        mid_b[st.index] = np.mean((r >= epsilon) & (r <= 1.0 - epsilon))
    return BandMasses(
        low=mc_aggregate(low_b, n_draws, seed),
        middle=mc_aggregate(mid_b, n_draws, seed),
        high=mc_aggregate(high_b, n_draws, seed),
    )


def overlap_functional_field(
    T: float,
    beta: float,
    phi: OverlapFunctionalSpec,
    n_disorder: int = DEFAULT_N_DISORDER,
    n_draws: int = DEFAULT_N_DRAWS,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    n_grid: int | None = None,
) -> MCEstimate:
    """Disorder-averaged Gibbs expectation of an s-replica overlap functional.

    Tabulated functionals are band-rounded with the given epsilon and
    mid-band draws are dropped from the average.
    """
    n = n_grid or field_mod.default_grid_size(T)
    rho = field_mod.cached_overlap_table(T, n)
    batch = np.empty(n_disorder)
    for st in disorder_states(T, beta, n_disorder, seed, (1.0,), n):
        idx = _draw_indices(st.rng, np.cumsum(st.weights.weights), n_draws, phi.s)
        vals, valid = _functional_values(phi, rho, idx, epsilon)
        batch[st.index] = vals[valid].mean() if valid.any() else np.nan
    batch = batch[~np.isnan(batch)]
    return mc_aggregate(batch, n_draws, seed)


def concentration_stat(
    T: float,
    beta: float,
    alpha: float,
    s: int,
    k: int,
    phi: OverlapFunctionalSpec,
    n_disorder: int = DEFAULT_N_DISORDER,
    n_draws: int = DEFAULT_N_DRAWS,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    n_grid: int | None = None,
) -> MCEstimate:
    """Normalized gap between the joint average of a truncated-field value
    times a functional and the product of their separate averages:

        |E G[X(alpha) phi] - E G[X(alpha)] * E G[phi]| / log log T

    The product of disorder expectations is estimated with a first-order
    (influence) correction so the standard error reflects the difference.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    if beta <= CRITICAL_BETA:
        raise ValueError(f"concentration is a low-temperature statement; need beta > 2, got {beta}")
    if not 1 <= k <= s:
        raise ValueError(f"k must lie in 1..{s}, got {k}")
    if phi.s != s:
        raise ValueError(f"functional is for s={phi.s}, requested s={s}")
    loglog = math.log(math.log(T))
    n = n_grid or field_mod.default_grid_size(T)
    rho = field_mod.cached_overlap_table(T, n)
    a_b = np.empty(n_disorder)
    c_b = np.empty(n_disorder)
    d_b = np.empty(n_disorder)
    for st in disorder_states(T, beta, n_disorder, seed, (alpha, 1.0), n):
        xs = st.grid.values_for(alpha)
        idx = _draw_indices(st.rng, np.cumsum(st.weights.weights), n_draws, s)
        vals, valid = _functional_values(phi, rho, idx, epsilon)
        xk = xs[idx[:, k - 1]]
        a_b[st.index] = (xk[valid] * vals[valid]).mean() if valid.any() else np.nan
        c_b[st.index] = float(np.dot(st.weights.weights, xs))
        d_b[st.index] = vals[valid].mean() if valid.any() else np.nan
    keep = ~np.isnan(a_b) & ~np.isnan(d_b)
    a_b, c_b, d_b = a_b[keep], c_b[keep], d_b[keep]
    c_mean = c_b.mean()
    d_mean = d_b.mean()
    r_b = (a_b - c_mean * d_b - d_mean * c_b + c_mean * d_mean) / loglog
    return aggregate_abs(r_b, n_draws, seed)
