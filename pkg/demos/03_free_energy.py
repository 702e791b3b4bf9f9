"""The perturbed free energy: finite-T curves against the closed-form
limit, and the derivative identities that link it to overlaps.

Run:  python demos/03_free_energy.py
"""

import numpy as np

from zetacascade.field import cached_field_grid
from zetacascade.free_energy import (
    LimitParams,
    derivative_at_zero,
    free_energy_curve,
    limiting_branch,
    limiting_free_energy,
    second_derivative_variance_check,
)

ALPHA, BETA = 0.5, 4.0

print("closed-form limit of f(u) and its branch structure:")
for u in (-0.8, -0.4, -0.1, 0.0, 0.5, 1.0):
    p = LimitParams(ALPHA, BETA, u)
    print(
        f"  u={u:+.1f}: V={p.V:.3f}  f={limiting_free_energy(p):8.4f}  [{limiting_branch(p)}]"
    )
print(f"at u=0 every branch meets at beta - 1 = {BETA - 1}")

print("\nfinite-T curve at T=1e5 (16 disorder seeds) vs the limit:")
curve = free_energy_curve(1e5, ALPHA, BETA, u_values=np.linspace(-0.8, 1.0, 10),
                          n_disorder=16, seed=0)
for j, u in enumerate(curve.u_values):
    print(
        f"  u={u:+.2f}: finite {curve.finite_means[j]:7.4f} +- {curve.finite_stderrs[j]:.4f}"
        f"   limit {curve.limit_values[j]:7.4f}"
    )
print("convergence is 1/log log T slow: the shapes match, the values lag.")

grid = cached_field_grid(1e6, seed=123, alphas=(ALPHA, 1.0))
direct, central = derivative_at_zero(grid, ALPHA, BETA)
print(f"\nf'(0) two ways on one realization at T=1e6:")
print(f"  Gibbs average  : {direct:.6f}")
print(f"  central diff   : {central:.6f}")
print(f"  (limit value would be beta*alpha = {BETA * ALPHA})")

fd2, var = second_derivative_variance_check(grid, ALPHA, BETA)
print(f"f''(0) rescaled  : {fd2:.6f}  vs Gibbs variance of X(alpha): {var:.6f}")
