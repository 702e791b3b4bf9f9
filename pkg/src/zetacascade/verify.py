"""Named verification batteries behind the `zc verify` subcommand.

The fast suite holds the quantitative checks that a correct build passes
deterministically in a few minutes.  The full suite adds the desk-scale
trend experiments at T up to 1e8 with the pinned parameters; those
criteria compare loglog-slow limits against finite-size behavior and
their outcomes are reported honestly, pass or fail.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field

import numba
import numpy as np

from . import field as field_mod
from . import functionals as fn
from ._kernels import phasor_grid_sum
from ._streams import mix64
from .cascade import (
    clear_power_cache,
    gg_residual_pd,
    pd_moment_closed_form,
    pd_power_moment,
)
from .estimates import MCEstimate, pooled_stderr, trend_nonincreasing
from .field import FieldGrid, default_grid_size, evaluate_field, sample_disorder
from .free_energy import (
    LimitParams,
    derivative_at_zero,
    limiting_branch,
    limiting_free_energy,
    second_derivative_variance_check,
)
from .gibbs import (
    disorder_states,
    gibbs_weights,
    two_overlap_histogram,
)
from .harness import gg_residual_field, subcritical_report
from .primes import sieve

FULL_T_LIST = (1e4, 1e6, 1e8)
FAST_T_LIST = (1e4, 1e6)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    summary: str
    details: dict = dc_field(default_factory=dict)
    seconds: float = 0.0


def _result(name, passed, summary, **details):
    return CriterionResult(name=name, passed=bool(passed), summary=summary, details=details)


# ---------------------------------------------------------------------------
# quantitative checks (fast suite)


def check_pd_moment_m2(seed=0):
    est = pd_power_moment(0.5, 2, n_samples=10_000, seed=seed)
    want = pd_moment_closed_form(0.5, 2)
    ok = abs(est.mean - want) < 3 * est.stderr
    return _result(
        "pd_moment_m2",
        ok,
        f"estimate {est.mean:.4f} +- {est.stderr:.4f} vs closed form {want}",
        estimate=est.mean, stderr=est.stderr, closed_form=want,
    )


def check_pd_moment_m3(seed=0):
    est = pd_power_moment(0.5, 3, n_samples=10_000, seed=seed)
    want = pd_moment_closed_form(0.5, 3)
    ok = abs(est.mean - want) < 3 * est.stderr
    return _result(
        "pd_moment_m3",
        ok,
        f"estimate {est.mean:.4f} +- {est.stderr:.4f} vs closed form {want}",
        estimate=est.mean, stderr=est.stderr, closed_form=want,
    )


def check_gg_cascade_exactness(seed=0, n_samples=10_000, max_s=4, n_random=20):
    """Constant psi cancels to 1e-14; random (psi, phi) residuals sit within
    3 stderr of zero for every (s, k)."""
    worst_const = 0.0
    worst_sigma = 0.0
    n_checked = 0
    rng = np.random.default_rng(mix64(seed, 999))
    for s in range(1, max_s + 1):
        for k in range(1, s + 1):
            phi_c = fn.random_tabulated(s, np.random.default_rng(mix64(seed, s * 10 + k)))
            const = gg_residual_pd(0.5, s, k, (0.4, 0.4), phi_c, n_samples=n_samples, seed=seed)
            worst_const = max(worst_const, const.mean)
            for _ in range(n_random):
                psi = tuple(rng.uniform(-1, 1, 2))
                phi = fn.random_tabulated(s, rng)
                r = gg_residual_pd(0.5, s, k, psi, phi, n_samples=n_samples, seed=seed)
                if r.mean <= 1e-14:
                    # identically-cancelling cases (e.g. s = 1) leave only
                    # rounding noise in both the mean and the stderr
                    sigma = 0.0
                else:
                    sigma = r.mean / r.stderr if r.stderr > 0 else math.inf
                worst_sigma = max(worst_sigma, sigma)
                n_checked += 1
    ok = worst_const <= 1e-14 and worst_sigma < 3.0
    return _result(
        "gg_cascade_exactness",
        ok,
        f"{n_checked} random (psi,phi) pairs, worst {worst_sigma:.2f} sigma; "
        f"constant-psi residual {worst_const:.2e}",
        worst_sigma=worst_sigma, worst_const=worst_const, n_checked=n_checked,
    )


def check_free_energy_closed_form():
    """Branch continuity on a 200x200 lattice and exact values at u = 0."""
    max_jump = 0.0
    for u in np.linspace(-0.9, -1e-6, 200):
        for alpha in np.linspace(0.005, 1.0, 200):
            p = LimitParams(alpha=float(alpha), beta=3.0, u=float(u))
            beta_star = 2.0 / math.sqrt(p.V)
            annealed = beta_star**2 / 4.0 * p.V
            frozen = beta_star * math.sqrt(p.V) - 1.0
            max_jump = max(max_jump, abs(annealed - frozen))
    exact_at_zero = all(
        limiting_free_energy(LimitParams(0.5, b, 0.0)) == b - 1.0 for b in (2.5, 3.0, 4.0, 8.0)
    )
    # u = 0 is the tilted/frozen boundary: approach from both sides
    for beta in np.linspace(2.01, 8.0, 200):
        left = limiting_free_energy(LimitParams(0.5, float(beta), -1e-13))
        right = limiting_free_energy(LimitParams(0.5, float(beta), 1e-13))
        max_jump = max(max_jump, abs(left - right))
    ok = max_jump < 1e-10 and exact_at_zero
    return _result(
        "free_energy_closed_form",
        ok,
        f"max branch-boundary jump {max_jump:.2e}; beta-1 at u=0 exact: {exact_at_zero}",
        max_jump=max_jump, exact_at_zero=exact_at_zero,
    )


def check_derivative_identities(T=1e6, seed=1):
    grid = field_mod.cached_field_grid(T, mix64(seed, 0), (0.5, 1.0))
    direct, central = derivative_at_zero(grid, 0.5, 4.0, h_step=1e-3)
    rel = abs(central - direct) / abs(direct)
    fd2, var = second_derivative_variance_check(grid, 0.5, 4.0, 0.0, 1e-2)
    rel2 = abs(fd2 - var) / abs(var)
    ok = rel < 1e-3 and rel2 < 1e-2
    return _result(
        "derivative_identities",
        ok,
        f"first-derivative relative gap {rel:.2e} (tol 1e-3); "
        f"second-derivative vs variance {rel2:.2e} (tol 1e-2)",
        first_rel_gap=rel, second_rel_gap=rel2, T=T,
    )


def check_oracle_equivalence(seed=11):
    """Phasor recurrence vs direct summation, and weight normalization
    under extreme exponents."""
    ps = sieve(10**4)
    d = sample_disorder(ps, seed)
    n = 4096
    grid = evaluate_field(d, [1.0], n)
    p = ps.primes.astype(np.float64)
    log_p, amp = np.log(p), 1.0 / np.sqrt(p)
    h = np.arange(n) / n
    direct = np.array([np.sum(np.cos(d.phases - hh * log_p) * amp) for hh in h])
    max_diff = float(np.abs(grid.values_for(1.0) - direct).max())

    rng = np.random.default_rng(seed)
    worst_norm = 0.0
    for scale in (1e3, 317.0, 50.0):
        g = FieldGrid(T=1e4, alphas=(1.0,), n_grid=512,
                      values=rng.uniform(-scale, scale, (1, 512)), seed=0)
        w = gibbs_weights(g, beta=1.0)
        worst_norm = max(worst_norm, abs(float(w.weights.sum()) - 1.0))
    ok = max_diff < 1e-9 and worst_norm < 1e-12
    return _result(
        "oracle_equivalence",
        ok,
        f"phasor vs direct max diff {max_diff:.2e} (tol 1e-9); "
        f"normalization error {worst_norm:.2e} (tol 1e-12)",
        max_diff=max_diff, worst_norm=worst_norm,
    )


def check_determinism(seed=3):
    """Bit-identical statistics across repeat runs and worker counts."""
    save_threads = numba.get_num_threads()
    counts = [1, save_threads] if save_threads > 1 else [1, 1]
    results = []
    try:
        for threads in counts:
            numba.set_num_threads(threads)
            field_mod.clear_field_cache()
            clear_power_cache()
            bands = two_overlap_histogram(1e4, 4.0, n_disorder=8, n_draws=2000, seed=seed)
            moment = pd_power_moment(0.5, 3, n_samples=2000, seed=seed)
            ggf = gg_residual_field(1e4, 4.0, 0.5, 2, 1, n_disorder=4, n_draws=500, seed=seed)
            results.append((bands.low.mean, bands.middle.mean, bands.high.mean,
                            moment.mean, moment.stderr, ggf.mean))
    finally:
        numba.set_num_threads(save_threads)
        field_mod.clear_field_cache()
    identical = results[0] == results[1]
    return _result(
        "determinism",
        identical,
        "statistics bit-identical across worker counts" if identical
        else f"mismatch across worker counts: {results[0]} vs {results[1]}",
        values=list(results[0]),
    )


def check_two_overlap_structure(T_list=FAST_T_LIST, seed=0, n_disorder=16, n_draws=2000):
    """Structural validity of the band masses at small T."""
    worst = 0.0
    details = {}
    for T in T_list:
        b = two_overlap_histogram(T, 4.0, n_disorder=n_disorder, n_draws=n_draws, seed=seed)
        total = b.low.mean + b.middle.mean + b.high.mean
        worst = max(worst, abs(total - 1.0))
        details[f"T={T:g}"] = [b.low.mean, b.middle.mean, b.high.mean]
        if not all(0.0 <= e.mean <= 1.0 for e in b):
            worst = math.inf
    ok = worst < 1e-12
    return _result(
        "two_overlap_structure", ok,
        f"band masses sum to 1 within {worst:.2e}", **details,
    )


def _band_masses(T_list, beta, seed, n_disorder, n_draws):
    return [
        two_overlap_histogram(T, beta, n_disorder=n_disorder, n_draws=n_draws, seed=seed)
        for T in T_list
    ]


# ---------------------------------------------------------------------------
# desk-scale trend criteria (full suite)


def check_two_overlap_trend(T_list=FULL_T_LIST, seed=0, n_disorder=64, n_draws=10_000):
    """Middle-band mass nonincreasing and endpoint masses approaching
    (1 - 2/beta weighting) at beta = 4, as T grows."""
    bands = _band_masses(T_list, 4.0, seed, n_disorder, n_draws)
    middles = [b.middle for b in bands]
    mid_ok = trend_nonincreasing(middles)
    distances = []
    for b in bands:
        d = abs(b.low.mean - 0.5) + abs(b.high.mean - 0.5)
        stderr = math.hypot(b.low.stderr, b.high.stderr)
        distances.append(MCEstimate(d, stderr, b.low.n_outer, b.low.n_inner, seed))
    end_ok = trend_nonincreasing(distances)
    summary = (
        "middle mass per T: "
        + ", ".join(f"{m.mean:.4f}+-{m.stderr:.4f}" for m in middles)
        + f" (nonincreasing: {mid_ok}); endpoint distance: "
        + ", ".join(f"{d.mean:.4f}" for d in distances)
        + f" (nonincreasing: {end_ok})"
    )
    return _result(
        "two_overlap_trend", mid_ok and end_ok, summary,
        middle=[m.mean for m in middles],
        middle_stderr=[m.stderr for m in middles],
        endpoint_distance=[d.mean for d in distances],
    )


def check_gg_field_trend(T_list=FULL_T_LIST, seed=0, n_disorder=64, n_draws=10_000):
    phi = fn.from_callable(2, lambda o: (o[:, 0] > 0.8).astype(float))
    residuals = [
        gg_residual_field(T, 4.0, 0.5, 2, 1, phi=phi,
                          n_disorder=n_disorder, n_draws=n_draws, seed=seed)
        for T in T_list
    ]
    ok = trend_nonincreasing(residuals)
    summary = "residual per T: " + ", ".join(
        f"{r.mean:.5f}+-{r.stderr:.5f}" for r in residuals
    ) + f" (nonincreasing: {ok})"
    return _result(
        "gg_field_trend", ok, summary,
        residuals=[r.mean for r in residuals],
        stderrs=[r.stderr for r in residuals],
    )


def check_subcritical(T_list=FULL_T_LIST, seed=0, n_disorder=64, n_draws=10_000):
    """At beta = 1 the low-band mass should exceed 0.9 at the largest T and
    increase along the list."""
    report = subcritical_report(1.0, T_list, 2, None, n_disorder, n_draws, seed)
    masses = [row.low_band_mass for row in report.rows]
    increasing = all(b.mean >= a.mean - 2 * pooled_stderr(a, b) for a, b in zip(masses, masses[1:]))
    strictly_up = all(b.mean > a.mean for a, b in zip(masses, masses[1:]))
    final_ok = masses[-1].mean > 0.9
    summary = "low-band mass per T: " + ", ".join(
        f"{m.mean:.4f}+-{m.stderr:.4f}" for m in masses
    ) + f"; final > 0.9: {final_ok}; increasing: {strictly_up}"
    return _result(
        "subcritical", final_ok and strictly_up, summary,
        low_band=[m.mean for m in masses], stderrs=[m.stderr for m in masses],
    )


# ---------------------------------------------------------------------------
# suites


FAST_CHECKS = (
    ("pd_moment_m2", check_pd_moment_m2),
    ("pd_moment_m3", check_pd_moment_m3),
    ("gg_cascade_exactness", lambda seed=0: check_gg_cascade_exactness(seed, 4000, 3, 8)),
    ("free_energy_closed_form", lambda seed=0: check_free_energy_closed_form()),
    ("derivative_identities", lambda seed=0: check_derivative_identities(1e5, seed + 1)),
    ("oracle_equivalence", lambda seed=0: check_oracle_equivalence(seed + 11)),
    ("two_overlap_structure", check_two_overlap_structure),
    ("determinism", lambda seed=0: check_determinism(seed + 3)),
)

FULL_CHECKS = (
    ("pd_moment_m2", check_pd_moment_m2),
    ("pd_moment_m3", check_pd_moment_m3),
    ("gg_cascade_exactness", lambda seed=0: check_gg_cascade_exactness(seed, 10_000, 4, 20)),
    ("free_energy_closed_form", lambda seed=0: check_free_energy_closed_form()),
    ("derivative_identities", lambda seed=0: check_derivative_identities(1e6, seed + 1)),
    ("oracle_equivalence", lambda seed=0: check_oracle_equivalence(seed + 11)),
    ("two_overlap_structure", check_two_overlap_structure),
    ("determinism", lambda seed=0: check_determinism(seed + 3)),
    ("two_overlap_trend", check_two_overlap_trend),
    ("gg_field_trend", check_gg_field_trend),
    ("subcritical", check_subcritical),
)


def prewarm_fields(T_list, seed=0, n_disorder=64, alphas=(0.5, 1.0)):
    """Evaluate and cache every disorder realization once per T, with the
    full truncation set, so later statistics slice instead of recomputing."""
    for T in T_list:
        for _ in disorder_states(T, 4.0, n_disorder, seed, alphas):
            pass
        field_mod.cached_overlap_table(T, default_grid_size(T))


def run_suite(suite: str = "fast", seed: int = 0, only=None) -> list[CriterionResult]:
    if suite == "fast":
        checks = FAST_CHECKS
    elif suite == "full":
        checks = FULL_CHECKS
        prewarm_fields(FULL_T_LIST, seed)
    else:
        raise ValueError(f"unknown suite {suite!r}; choose fast or full")
    results = []
    for name, check in checks:
        if only is not None and name not in only:
            continue
        t0 = time.time()
        res = check(seed=seed)
        res.seconds = round(time.time() - t0, 3)
        results.append(res)
    return results
