"""Cross-model verification: identity residuals on the finite-T field,
field-vs-cascade functional comparison, and subcritical checks.

Every residual is a paired estimator: all terms of an identity are
computed from the same replica draws, so constant inputs cancel exactly
rather than statistically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import field as field_mod
from .cascade import PDWeights, pd_overlap_functional
from .estimates import MCEstimate, aggregate_abs, mc_aggregate, pooled_stderr, trend_nonincreasing
from .free_energy import clipped_overlap_integral
from .functionals import CALLABLE, TABLE, OverlapFunctionalSpec, pair_order
from .gibbs import (
    CRITICAL_BETA,
    DEFAULT_EPSILON,
    DEFAULT_N_DISORDER,
    DEFAULT_N_DRAWS,
    _draw_indices,
    _functional_values,
    _pair_overlaps,
    disorder_states,
    two_overlap_histogram,
)
from ._streams import ROLE_GENERIC, substream_rng

DEFAULT_T_LIST = (1e4, 1e6, 1e8)


@dataclass(frozen=True)
class OverlapMatrix:
    """Symmetric overlap matrix of s replicas with unit diagonal."""

    s: int
    entries: np.ndarray

    def __post_init__(self):
        e = self.entries
        if e.shape != (self.s, self.s):
            raise ValueError(f"entries must be {self.s}x{self.s}, got {e.shape}")
        if not np.array_equal(e, e.T):
            raise ValueError("overlap matrix must be exactly symmetric")
        if not np.all(np.diag(e) == 1.0):
            raise ValueError("overlap matrix diagonal must be exactly 1")


def field_overlap_matrices(T: float, beta: float, s: int, n_draws: int, seed: int,
                           n_grid: int | None = None, n_disorder: int = 1) -> list[OverlapMatrix]:
    """Overlap matrices of replica tuples sampled from field Gibbs measures."""
    n = n_grid or field_mod.default_grid_size(T)
    rho = field_mod.cached_overlap_table(T, n)
    out = []
    for st in disorder_states(T, beta, n_disorder, seed, (1.0,), n):
        idx = _draw_indices(st.rng, np.cumsum(st.weights.weights), n_draws, s)
        for row in idx:
            m = rho[np.abs(row[:, None] - row[None, :])]
            out.append(OverlapMatrix(s=s, entries=m))
    return out


def pd_overlap_matrices(pd: PDWeights, s: int, n_draws: int, seed: int) -> list[OverlapMatrix]:
    """0/1 overlap matrices of replicas drawn from one cascade sample."""
    rng = substream_rng(seed, ROLE_GENERIC, 0)
    w = pd.weights / pd.weights.sum()
    cumw = np.cumsum(w)
    u = rng.random((n_draws, s))
    idx = np.minimum(np.searchsorted(cumw, u, side="right"), w.size - 1)
    out = []
    for row in idx:
        m = (row[:, None] == row[None, :]).astype(np.float64)
        out.append(OverlapMatrix(s=s, entries=m))
    return out


def ultrametric_violations(matrices: Sequence[OverlapMatrix]) -> int:
    """Count triples where two overlaps are 1 but the third is not."""
    bad = 0
    for m in matrices:
        e = m.entries
        s = m.s
        for a in range(s):
            for b in range(a + 1, s):
                for c in range(b + 1, s):
                    trio = sorted([e[a, b], e[a, c], e[b, c]])
                    if trio[1] == 1.0 and trio[2] == 1.0 and trio[0] != 1.0:
                        bad += 1
    return bad


def _psi_values(psi, r: np.ndarray, alpha: float, epsilon: float):
    """psi applied to raw overlaps: None means the clipped overlap integral
    of the identity; a callable acts on the raw values; a (psi0, psi1)
    pair is applied through band-rounding, excluding mid-band entries."""
    if psi is None:
        return clipped_overlap_integral(r, alpha), np.ones(r.size, dtype=bool)
    if callable(psi):
        return np.asarray(psi(r), dtype=np.float64), np.ones(r.size, dtype=bool)
    psi0, psi1 = float(psi[0]), float(psi[1])
    high = r >= 1.0 - epsilon
    low = r <= epsilon
    return np.where(high, psi1, psi0), high | low


def gg_residual_field(
    T: float,
    beta: float,
    alpha: float,
    s: int,
    k: int,
    psi=None,
    phi: OverlapFunctionalSpec | None = None,
    n_disorder: int = DEFAULT_N_DISORDER,
    n_draws: int = DEFAULT_N_DRAWS,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    n_grid: int | None = None,
) -> MCEstimate:
    """Residual of the replica identity on the finite-T Gibbs measure:

        E G^(s+1)[psi(rho_{k,s+1}) phi]
          - (1/s) E G^2[psi(rho_12)] E G^s[phi]
          - (1/s) sum_{l != k} E G^s[psi(rho_{k,l}) phi]

    By default psi is the clipped overlap integral int_0^alpha 1{y < rho} dy.
    Overlaps come from the exact prime sums.
    """
    if beta <= CRITICAL_BETA:
        raise ValueError(f"need beta > {CRITICAL_BETA}, got {beta}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    if not 1 <= k <= s:
        raise ValueError(f"k must lie in 1..{s}, got {k}")
    from .functionals import constant

    if phi is None:
        phi = constant(s, 1.0)
    if phi.s != s:
        raise ValueError(f"functional is for s={phi.s}, requested s={s}")
    n = n_grid or field_mod.default_grid_size(T)
    rho = field_mod.cached_overlap_table(T, n)
    t1_b = np.empty(n_disorder)
    psi_b = np.empty(n_disorder)
    phi_b = np.empty(n_disorder)
    t3_b = np.empty(n_disorder)
    for st in disorder_states(T, beta, n_disorder, seed, (alpha, 1.0), n):
        idx = _draw_indices(st.rng, np.cumsum(st.weights.weights), n_draws, s + 1)
        vals, valid = _functional_values(phi, rho, idx[:, :s], epsilon)

        r_new = rho[np.abs(idx[:, k - 1] - idx[:, s])]
        psi_new, ok_new = _psi_values(psi, r_new, alpha, epsilon)
        r_pair = rho[np.abs(idx[:, 0] - idx[:, 1])]
        psi_pair, ok_pair = _psi_values(psi, r_pair, alpha, epsilon)
        keep = valid & ok_new & ok_pair

        psi_old = []
        for l in range(1, s + 1):
            if l == k:
                continue
            r_l = rho[np.abs(idx[:, k - 1] - idx[:, l - 1])]
            v_l, ok_l = _psi_values(psi, r_l, alpha, epsilon)
            psi_old.append(v_l)
            keep &= ok_l
        if not keep.any():
            t1_b[st.index] = np.nan
            continue
        t1_b[st.index] = np.mean(psi_new[keep] * vals[keep])
        psi_b[st.index] = np.mean(psi_pair[keep])
        phi_b[st.index] = np.mean(vals[keep])
        acc = 0.0
        for v_l in psi_old:
            acc += np.mean(v_l[keep] * vals[keep])
        t3_b[st.index] = acc / s
    good = ~np.isnan(t1_b)
    t1_b, psi_b, phi_b, t3_b = t1_b[good], psi_b[good], phi_b[good], t3_b[good]
    psi_mean = psi_b.mean()
    phi_mean = phi_b.mean()
    r_b = t1_b - (psi_b * phi_mean + psi_mean * phi_b - psi_mean * phi_mean) / s - t3_b
    return aggregate_abs(r_b, n_draws, seed)


@dataclass(frozen=True)
class CompareRow:
    T: float
    estimate: MCEstimate
    exclusion_rate: MCEstimate
    gap: float


@dataclass(frozen=True)
class CompareReport:
    beta: float
    theta: float
    epsilon: float
    rows: tuple[CompareRow, ...]
    cascade: MCEstimate

    def gaps(self) -> list[float]:
        return [row.gap for row in self.rows]


def compare_field_vs_cascade(
    beta: float,
    phi: OverlapFunctionalSpec,
    T_list: Sequence[float] = DEFAULT_T_LIST,
    n_disorder: int = DEFAULT_N_DISORDER,
    n_draws: int = DEFAULT_N_DRAWS,
    n_pd_samples: int = 10_000,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    n_grid: int | None = None,
) -> CompareReport:
    """Field-side functional estimates per T against the cascade limit at
    theta = 2/beta, with mid-band exclusion rates as a diagnostic."""
    if beta <= CRITICAL_BETA:
        raise ValueError(f"need beta > {CRITICAL_BETA}, got {beta}")
    if phi.kind != TABLE:
        raise ValueError("comparison needs a tabulated functional (cascade side is 0/1)")
    theta = CRITICAL_BETA / beta
    cascade = pd_overlap_functional(theta, phi, n_pd_samples, seed)
    rows = []
    for T in T_list:
        n = n_grid or field_mod.default_grid_size(T)
        rho = field_mod.cached_overlap_table(T, n)
        val_b = np.empty(n_disorder)
        exc_b = np.empty(n_disorder)
        for st in disorder_states(T, beta, n_disorder, seed, (1.0,), n):
            idx = _draw_indices(st.rng, np.cumsum(st.weights.weights), n_draws, phi.s)
            vals, valid = _functional_values(phi, rho, idx, epsilon)
            exc_b[st.index] = 1.0 - valid.mean()
            val_b[st.index] = vals[valid].mean() if valid.any() else np.nan
        ok = ~np.isnan(val_b)
        est = mc_aggregate(val_b[ok], n_draws, seed)
        rows.append(
            CompareRow(
                T=T,
                estimate=est,
                exclusion_rate=mc_aggregate(exc_b, n_draws, seed),
                gap=est.mean - cascade.mean,
            )
        )
    return CompareReport(beta=beta, theta=theta, epsilon=epsilon, rows=tuple(rows), cascade=cascade)


@dataclass(frozen=True)
class SubcriticalRow:
    T: float
    low_band_mass: MCEstimate
    functional: MCEstimate


@dataclass(frozen=True)
class SubcriticalReport:
    beta: float
    epsilon: float
    target_functional: float
    rows: tuple[SubcriticalRow, ...]


def subcritical_report(
    beta: float,
    T_list: Sequence[float] = DEFAULT_T_LIST,
    s: int = 2,
    phi: OverlapFunctionalSpec | None = None,
    n_disorder: int = DEFAULT_N_DISORDER,
    n_draws: int = DEFAULT_N_DRAWS,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    n_grid: int | None = None,
) -> SubcriticalReport:
    """High-temperature behavior: the low-overlap band mass should approach
    1 and s-point functionals should approach their value on the identity
    overlap pattern (replicas all far apart)."""
    if not 0.0 < beta < CRITICAL_BETA:
        raise ValueError(f"subcritical means 0 < beta < {CRITICAL_BETA}, got {beta}")
    from .functionals import all_equal_indicator

    if phi is None:
        phi = all_equal_indicator(s)
    if phi.s != s:
        raise ValueError(f"functional is for s={phi.s}, requested s={s}")
    if phi.kind == TABLE:
        target = float(phi.table[0])  # identity pattern: all off-diagonal 0
    else:
        from .functionals import n_pairs

        target = float(phi.evaluate_real(np.zeros((1, n_pairs(s))))[0])
    rows = []
    for T in T_list:
        bands = two_overlap_histogram(T, beta, epsilon, n_disorder, n_draws, seed, n_grid)
        n = n_grid or field_mod.default_grid_size(T)
        rho = field_mod.cached_overlap_table(T, n)
        val_b = np.empty(n_disorder)
        for st in disorder_states(T, beta, n_disorder, seed, (1.0,), n):
            idx = _draw_indices(st.rng, np.cumsum(st.weights.weights), n_draws, s)
            vals, valid = _functional_values(phi, rho, idx, epsilon)
            val_b[st.index] = vals[valid].mean() if valid.any() else np.nan
        ok = ~np.isnan(val_b)
        rows.append(
            SubcriticalRow(
                T=T,
                low_band_mass=bands.low,
                functional=mc_aggregate(val_b[ok], n_draws, seed),
            )
        )
    return SubcriticalReport(
        beta=beta, epsilon=epsilon, target_functional=target, rows=tuple(rows)
    )
