import math

import numpy as np
import pytest

from zetacascade import functionals as fn
from zetacascade.field import FieldGrid, evaluate_field, sample_disorder
from zetacascade.primes import sieve
from zetacascade.free_energy import (
    BRANCH_ANNEALED,
    BRANCH_FROZEN,
    BRANCH_TILTED,
    FreeEnergyCurve,
    LimitParams,
    bk_residual,
    clipped_overlap_integral,
    default_u_grid,
    derivative_at_zero,
    derivative_identity_gap,
    free_energy_curve,
    limiting_branch,
    limiting_free_energy,
    perturbed_free_energy,
    second_derivative_variance_check,
)


def synthetic_grid(values, alphas, T=1e4):
    arr = np.asarray(values, dtype=np.float64)
    return FieldGrid(T=T, alphas=tuple(alphas), n_grid=arr.shape[1], values=arr, seed=0)


def real_grid(T=1e5, seed=1, alphas=(0.5, 1.0), n=512):
    return evaluate_field(sample_disorder(sieve(T), seed), alphas, n)


def test_zero_field_gives_zero_free_energy():
    g = synthetic_grid(np.zeros((2, 32)), (0.5, 1.0))
    for u in (-0.5, 0.0, 0.7):
        assert perturbed_free_energy(g, 0.5, 3.0, u) == 0.0


def test_u_zero_independent_of_alpha():
    g = real_grid(alphas=(0.3, 0.7, 1.0))
    a = perturbed_free_energy(g, 0.3, 4.0, 0.0)
    b = perturbed_free_energy(g, 0.7, 4.0, 0.0)
    assert a == b


def test_free_energy_rejects_bad_inputs():
    g = synthetic_grid(np.zeros((1, 8)), (1.0,))
    with pytest.raises(ValueError):
        perturbed_free_energy(g, 1.0, 2.0, -1.0)
    small_T = synthetic_grid(np.zeros((1, 8)), (1.0,), T=10.0)
    with pytest.raises(ValueError):
        perturbed_free_energy(small_T, 1.0, 2.0, 0.0)  # T <= e**e


def test_limiting_values_from_branch_formulas():
    # u = 0 gives beta - 1 whatever alpha
    for alpha in (0.1, 0.5, 1.0):
        assert limiting_free_energy(LimitParams(alpha, 3.0, 0.0)) == 2.0
    # tilted branch
    assert limiting_free_energy(LimitParams(0.5, 4.0, 0.25)) == pytest.approx(3.5)
    # frozen branch: V=0.25, 2/sqrt(V)=4 < 5
    p = LimitParams(1.0, 5.0, -0.5)
    assert p.V == pytest.approx(0.25)
    assert limiting_branch(p) == BRANCH_FROZEN
    assert limiting_free_energy(p) == pytest.approx(1.5)
    # annealed branch: beta below 2/sqrt(V)
    p = LimitParams(1.0, 2.5, -0.5)
    assert limiting_branch(p) == BRANCH_ANNEALED
    assert limiting_free_energy(p) == pytest.approx(2.5**2 / 4 * 0.25)
    assert limiting_branch(LimitParams(0.5, 4.0, 0.0)) == BRANCH_TILTED


def test_limiting_continuity_at_zero_perturbation():
    beta = 4.0
    for alpha in (0.2, 0.8):
        left = limiting_free_energy(LimitParams(alpha, beta, -1e-12))
        right = limiting_free_energy(LimitParams(alpha, beta, 1e-12))
        assert left == pytest.approx(beta - 1.0, abs=1e-9)
        assert right == pytest.approx(beta - 1.0, abs=1e-9)


def test_limiting_continuity_at_branch_boundary():
    # where beta = 2/sqrt(V), the annealed and frozen formulas agree
    for u in (-0.7, -0.4, -0.1):
        for alpha in (0.3, 0.9):
            p = LimitParams(alpha, 3.0, u)
            beta_star = 2.0 / math.sqrt(p.V)
            annealed = beta_star**2 / 4.0 * p.V
            frozen = beta_star * math.sqrt(p.V) - 1.0
            assert annealed == pytest.approx(frozen, abs=1e-12)
            assert annealed == pytest.approx(1.0, abs=1e-12)


def test_limiting_rejects_subcritical():
    with pytest.raises(ValueError):
        limiting_free_energy(LimitParams(0.5, 2.0, 0.1))
    with pytest.raises(ValueError):
        limiting_free_energy(LimitParams(0.5, 1.5, -0.1))


def test_limit_params_validation():
    with pytest.raises(ValueError):
        LimitParams(-0.1, 3.0, 0.0)
    with pytest.raises(ValueError):
        LimitParams(0.5, -1.0, 0.0)
    with pytest.raises(ValueError):
        LimitParams(0.5, 3.0, -1.0)
    assert LimitParams(0.5, 3.0, 0.0).V == 1.0


def test_derivative_zero_field():
    g = synthetic_grid(np.zeros((2, 16)), (0.5, 1.0))
    direct, central = derivative_at_zero(g, 0.5, 4.0)
    assert direct == 0.0
    assert central == 0.0


def test_derivative_direct_vs_central_difference():
    g = real_grid(T=1e5, seed=3)
    direct, central = derivative_at_zero(g, 0.5, 4.0, h_step=1e-3)
    assert central == pytest.approx(direct, rel=1e-4)


def test_derivative_h_step_validation():
    g = real_grid()
    with pytest.raises(ValueError):
        derivative_at_zero(g, 0.5, 4.0, h_step=0.0)
    with pytest.raises(ValueError):
        derivative_at_zero(g, 0.5, 4.0, h_step=0.5)


def test_convexity_of_finite_T_free_energy():
    g = real_grid(T=1e4, seed=5)
    us = np.linspace(-0.9, 1.0, 39)
    f = [perturbed_free_energy(g, 0.5, 4.0, float(u)) for u in us]
    second = np.diff(f, 2)
    assert second.min() >= -1e-8


def test_second_derivative_matches_gibbs_variance():
    g = real_grid(T=1e5, seed=2)
    fd, var = second_derivative_variance_check(g, 0.5, 4.0, u=0.0, h_step=1e-2)
    assert var >= 0
    assert fd == pytest.approx(var, rel=1e-2)
    # convexity: the finite difference cannot be meaningfully negative
    assert fd >= -1e-8


def test_second_derivative_constant_truncated_field():
    values = np.vstack([np.full(32, 2.0), np.random.default_rng(0).normal(size=32)])
    g = synthetic_grid(values, (0.5, 1.0))
    fd, var = second_derivative_variance_check(g, 0.5, 3.0, u=0.0, h_step=1e-2)
    assert var == pytest.approx(0.0, abs=1e-12)
    assert fd == pytest.approx(0.0, abs=1e-9)


def test_second_derivative_validation():
    g = real_grid()
    with pytest.raises(ValueError):
        second_derivative_variance_check(g, 0.5, 4.0, u=-0.995, h_step=1e-2)


def test_clipped_overlap_integral():
    r = np.array([-0.5, 0.0, 0.3, 0.7, 1.0])
    np.testing.assert_allclose(clipped_overlap_integral(r, 0.5), [0, 0, 0.3, 0.5, 0.5])
    # alpha -> 0 empties the integral for any overlap value
    assert np.all(clipped_overlap_integral(r, 0.0) == 0.0)


def test_derivative_identity_gap_runs_and_is_signed():
    est = derivative_identity_gap(1e4, 0.5, 4.0, n_disorder=8, n_draws=500, seed=1)
    assert est.n_outer == 8
    assert est.stderr > 0
    a = derivative_identity_gap(1e4, 0.5, 4.0, n_disorder=8, n_draws=500, seed=1)
    assert a.mean == est.mean


def test_derivative_identity_gap_validation():
    with pytest.raises(ValueError):
        derivative_identity_gap(1e4, 0.0, 4.0, n_disorder=2, n_draws=10, seed=0)
    with pytest.raises(ValueError):
        derivative_identity_gap(1e4, 0.5, 1.0, n_disorder=2, n_draws=10, seed=0)


def test_bk_residual_zero_functional():
    phi = fn.constant(2, 0.0)
    est = bk_residual(1e4, 0.5, 4.0, 2, 1, phi, n_disorder=4, n_draws=100, seed=0)
    assert est.mean == 0.0


def test_bk_residual_s1_matches_derivative_identity_gap():
    # the s=1, phi=1 residual estimates the same quantity as the
    # derivative identity gap (the latter uses the exact Gibbs average,
    # so agreement is statistical, not bitwise)
    kw = dict(n_disorder=24, n_draws=4000, seed=3)
    bk = bk_residual(1e4, 0.5, 4.0, 1, 1, None, **kw)
    gap = derivative_identity_gap(1e4, 0.5, 4.0, **kw)
    tol = 4 * math.hypot(bk.stderr, gap.stderr) + 1e-3
    assert abs(bk.mean - abs(gap.mean)) < tol


def test_bk_residual_validation():
    with pytest.raises(ValueError):
        bk_residual(1e4, 0.5, 4.0, 2, 3, None, n_disorder=2, n_draws=10, seed=0)
    with pytest.raises(ValueError):
        bk_residual(1e4, 1.2, 4.0, 2, 1, None, n_disorder=2, n_draws=10, seed=0)


def test_default_u_grid_contains_zero_and_covers_range():
    u = default_u_grid()
    assert u.size == 46
    assert u[0] == -0.8
    assert u[-1] == 1.0
    assert 0.0 in u
    steps = np.diff(u)
    assert np.allclose(steps, steps[0])


def test_free_energy_curve_structure():
    curve = free_energy_curve(1e4, 0.5, 3.0, n_disorder=4, seed=0, n_grid=256)
    assert isinstance(curve, FreeEnergyCurve)
    j = int(np.flatnonzero(curve.u_values == 0.0)[0])
    assert curve.limit_values[j] == 2.0
    assert curve.branch_ids[j] == BRANCH_TILTED
    assert curve.finite_means.shape == curve.u_values.shape
    # finite-T curve is convex in u
    assert np.diff(curve.finite_means, 2).min() >= -1e-8
