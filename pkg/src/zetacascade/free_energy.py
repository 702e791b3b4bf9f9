"""Perturbed free energy of the field model: finite-T values on the grid,
the closed-form limit, and the residuals linking free-energy derivatives
to overlap distributions.

The finite-T free energy at perturbation u is

    f(u) = (1/log log T) * log( (1/N) * sum_j exp(beta*(u*X_j(alpha) + X_j)) )

which is convex and analytic in u; its u-derivatives are Gibbs moments of
the truncated field.  In the limit the free energy has three closed-form
branches meeting continuously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import field as field_mod
from .estimates import MCEstimate, aggregate_abs, mc_aggregate
from .functionals import OverlapFunctionalSpec, constant
from .gibbs import (
    CRITICAL_BETA,
    DEFAULT_EPSILON,
    DEFAULT_N_DISORDER,
    DEFAULT_N_DRAWS,
    _draw_indices,
    _functional_values,
    disorder_states,
    gibbs_weights,
)

MIN_T = math.exp(math.e)  # log log T must be comfortably positive

BRANCH_ANNEALED = "annealed"  # u < 0, beta <= 2/sqrt(V): quadratic in beta
BRANCH_FROZEN = "frozen"  # u < 0, beta >= 2/sqrt(V): linear in beta
BRANCH_TILTED = "tilted"  # u >= 0: linear in u


@dataclass(frozen=True)
class LimitParams:
    """Parameters of the limiting free energy; V is the effective variance
    factor (1+u)**2 * alpha + (1 - alpha) of the perturbed field."""

    alpha: float
    beta: float
    u: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.beta <= 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.u <= -1.0:
            raise ValueError(f"u must exceed -1, got {self.u}")

    @property
    def V(self) -> float:
        return (1.0 + self.u) ** 2 * self.alpha + (1.0 - self.alpha)


def limiting_branch(p: LimitParams) -> str:
    if p.beta <= CRITICAL_BETA:
        raise ValueError(f"the closed-form limit needs beta > {CRITICAL_BETA}, got {p.beta}")
    if p.u >= 0.0:
        return BRANCH_TILTED
    # at the boundary beta = 2/sqrt(V) both branches give the same value
    if p.beta >= 2.0 / math.sqrt(p.V):
        return BRANCH_FROZEN
    return BRANCH_ANNEALED


def limiting_free_energy(p: LimitParams) -> float:
    """Closed-form limit of the perturbed free energy, branch-selected."""
    branch = limiting_branch(p)
    if branch == BRANCH_TILTED:
        return p.beta * (p.alpha * p.u + 1.0) - 1.0
    if branch == BRANCH_FROZEN:
        return p.beta * math.sqrt(p.V) - 1.0
    return p.beta**2 / 4.0 * p.V


def _check_T(T: float) -> float:
    if T <= MIN_T:
        raise ValueError(f"T must exceed e**e ~ {MIN_T:.3f}, got {T}")
    return math.log(math.log(T))


def perturbed_free_energy(grid: field_mod.FieldGrid, alpha: float, beta: float, u: float) -> float:
    """Finite-T free energy of the u-perturbed model on one field grid."""
    loglog = _check_T(grid.T)
    w = gibbs_weights(grid, beta, u, alpha if u != 0.0 else _any_alpha(grid, alpha))
    return w.log_normalizer / loglog


def _any_alpha(grid: field_mod.FieldGrid, alpha: float) -> float | None:
    # with u = 0 the truncation level is irrelevant; keep it if present
    return alpha if alpha in grid.alphas else None


def derivative_at_zero(
    grid: field_mod.FieldGrid, alpha: float, beta: float, h_step: float = 1e-3
) -> tuple[float, float]:
    """The u-derivative of the free energy at u = 0, two ways.

    Returns (direct, central_difference): the direct form is the exact
    Gibbs average beta * G[X(alpha)] / log log T; the central difference
    uses perturbed_free_energy at +/- h_step.
    """
    if not 0.0 < h_step <= 0.1:
        raise ValueError(f"h_step must lie in (0, 0.1], got {h_step}")
    loglog = _check_T(grid.T)
    w = gibbs_weights(grid, beta)
    direct = beta * float(np.dot(w.weights, grid.values_for(alpha))) / loglog
    f_plus = perturbed_free_energy(grid, alpha, beta, h_step)
    f_minus = perturbed_free_energy(grid, alpha, beta, -h_step)
    central = (f_plus - f_minus) / (2.0 * h_step)
    return direct, central


def second_derivative_variance_check(
    grid: field_mod.FieldGrid, alpha: float, beta: float, u: float = 0.0, h_step: float = 1e-2
) -> tuple[float, float]:
    """Finite-difference second derivative of f, rescaled by log log T / beta^2,
    against the direct Gibbs variance of X(alpha) under the u-perturbed
    measure.  The two agree up to finite-difference truncation."""
    if u <= -1.0 + h_step:
        raise ValueError(f"u must exceed -1 + h_step, got u={u}, h_step={h_step}")
    loglog = _check_T(grid.T)
    f0 = perturbed_free_energy(grid, alpha, beta, u)
    f_plus = perturbed_free_energy(grid, alpha, beta, u + h_step)
    f_minus = perturbed_free_energy(grid, alpha, beta, u - h_step)
    fd = (f_plus - 2.0 * f0 + f_minus) / h_step**2
    rescaled = loglog * fd / beta**2
    w = gibbs_weights(grid, beta, u, alpha)
    xs = grid.values_for(alpha)
    mean = float(np.dot(w.weights, xs))
    variance = float(np.dot(w.weights, (xs - mean) ** 2))
    return rescaled, variance


def clipped_overlap_integral(rho, alpha: float):
    """int_0^alpha 1{y < rho} dy = clip(rho, 0, alpha); negative overlaps
    contribute nothing since the integral runs over [0, alpha]."""
    return np.clip(rho, 0.0, alpha)


def derivative_identity_gap(
    T: float,
    alpha: float,
    beta: float,
    n_disorder: int = DEFAULT_N_DISORDER,
    n_draws: int = DEFAULT_N_DRAWS,
    seed: int = 0,
    n_grid: int | None = None,
) -> MCEstimate:
    """Signed gap between the normalized derivative of the free energy and
    its two-replica overlap representation:

        (1/beta) * E G[X(alpha)] / ((1/2) log log T)
            - ( alpha - E G x G[ int_0^alpha 1{y < rho} dy ] ).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    if beta <= CRITICAL_BETA:
        raise ValueError(f"need beta > {CRITICAL_BETA}, got {beta}")
    loglog = _check_T(T)
    n = n_grid or field_mod.default_grid_size(T)
    rho = field_mod.cached_overlap_table(T, n)
    gap_b = np.empty(n_disorder)
    for st in disorder_states(T, beta, n_disorder, seed, (alpha, 1.0), n):
        xs = st.grid.values_for(alpha)
        lhs = 2.0 * float(np.dot(st.weights.weights, xs)) / (beta * loglog)
        idx = _draw_indices(st.rng, np.cumsum(st.weights.weights), n_draws, 2)
        integral = clipped_overlap_integral(rho[np.abs(idx[:, 0] - idx[:, 1])], alpha)
        gap_b[st.index] = lhs - (alpha - integral.mean())
    return mc_aggregate(gap_b, n_draws, seed)


def bk_residual(
    T: float,
    alpha: float,
    beta: float,
    s: int,
    k: int,
    phi: OverlapFunctionalSpec | None = None,
    n_disorder: int = DEFAULT_N_DISORDER,
    n_draws: int = DEFAULT_N_DRAWS,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
    n_grid: int | None = None,
) -> MCEstimate:
    """Residual of the derivative-overlap link for s replicas:

        (1/beta) * E G^s[X_k(alpha) phi] / ((1/2) log log T)
          - { sum_l E G^s[I_alpha(rho_kl) phi] - s E G^(s+1)[I_alpha(rho_k,s+1) phi] }

    with I_alpha the clipped overlap integral.  All terms are estimated
    from the same replica draws, so constant inputs cancel exactly.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    if not 1 <= k <= s:
        raise ValueError(f"k must lie in 1..{s}, got {k}")
    if phi is None:
        phi = constant(s, 1.0)
    if phi.s != s:
        raise ValueError(f"functional is for s={phi.s}, requested s={s}")
    loglog = _check_T(T)
    n = n_grid or field_mod.default_grid_size(T)
    rho = field_mod.cached_overlap_table(T, n)
    gap_b = np.empty(n_disorder)
    for st in disorder_states(T, beta, n_disorder, seed, (alpha, 1.0), n):
        xs = st.grid.values_for(alpha)
        idx = _draw_indices(st.rng, np.cumsum(st.weights.weights), n_draws, s + 1)
        vals, valid = _functional_values(phi, rho, idx[:, :s], epsilon)
        if not valid.any():
            gap_b[st.index] = np.nan
            continue
        vals = vals[valid]
        idx_v = idx[valid]
        xk = xs[idx_v[:, k - 1]]
        lhs = 2.0 * float(np.mean(xk * vals)) / (beta * loglog)
        bracket = 0.0
        for l in range(1, s + 1):
            if l == k:
                bracket += alpha * float(vals.mean())
            else:
                r = rho[np.abs(idx_v[:, k - 1] - idx_v[:, l - 1])]
                bracket += float(np.mean(clipped_overlap_integral(r, alpha) * vals))
        r_new = rho[np.abs(idx_v[:, k - 1] - idx_v[:, s])]
        bracket -= s * float(np.mean(clipped_overlap_integral(r_new, alpha) * vals))
        gap_b[st.index] = lhs - bracket
    gap_b = gap_b[~np.isnan(gap_b)]
    return aggregate_abs(gap_b, n_draws, seed)


@dataclass(frozen=True)
class FreeEnergyCurve:
    """Finite-T perturbed free energy over a u-grid, with the closed-form
    limit alongside."""

    T: float
    alpha: float
    beta: float
    u_values: np.ndarray
    finite_means: np.ndarray
    finite_stderrs: np.ndarray
    limit_values: np.ndarray
    branch_ids: tuple[str, ...]
    n_disorder: int
    seed_base: int


def default_u_grid() -> np.ndarray:
    """46 equispaced perturbations on [-0.8, 1], clear of -1 and covering
    both limit branches; spaced by 1/25 so u = 0 lands on the grid exactly."""
    return (np.arange(46) - 20) / 25.0


def free_energy_curve(
    T: float,
    alpha: float,
    beta: float,
    u_values=None,
    n_disorder: int = DEFAULT_N_DISORDER,
    seed: int = 0,
    n_grid: int | None = None,
) -> FreeEnergyCurve:
    _check_T(T)
    if u_values is None:
        u_values = default_u_grid()
    u_values = np.asarray(u_values, dtype=np.float64)
    finite = np.empty((n_disorder, u_values.size))
    for st in disorder_states(T, beta, n_disorder, seed, (alpha, 1.0), n_grid):
        for j, u in enumerate(u_values):
            finite[st.index, j] = perturbed_free_energy(st.grid, alpha, beta, float(u))
    limits = np.empty(u_values.size)
    branches = []
    for j, u in enumerate(u_values):
        p = LimitParams(alpha=alpha, beta=beta, u=float(u))
        limits[j] = limiting_free_energy(p)
        branches.append(limiting_branch(p))
    return FreeEnergyCurve(
        T=T,
        alpha=alpha,
        beta=beta,
        u_values=u_values,
        finite_means=finite.mean(axis=0),
        finite_stderrs=finite.std(axis=0, ddof=1) / math.sqrt(n_disorder),
        limit_values=limits,
        branch_ids=tuple(branches),
        n_disorder=n_disorder,
        seed_base=seed,
    )
