import itertools
import math

import numpy as np
import pytest

from zetacascade import functionals as fn
from zetacascade.cascade import (
    PDWeights,
    _gg_terms,
    _power_sum_table,
    gg_residual_pd,
    pd_moment_closed_form,
    pd_overlap_functional,
    pd_power_moment,
    sample_pd,
)


def test_sample_pd_normalization():
    for seed in range(5):
        pd = sample_pd(0.5, seed=seed)
        total = pd.weights.sum()
        assert total <= 1.0
        assert total + pd.tail_mass_bound >= 1.0 - 1e-9
        assert total >= 1.0 - 1e-4  # tail_tol reached before the atom cap here


def test_sample_pd_decreasing():
    pd = sample_pd(0.7, seed=3, tail_tol=1e-3)
    assert np.all(np.diff(pd.weights) <= 0)
    assert np.all(pd.weights >= 0)


def test_sample_pd_deterministic():
    a = sample_pd(0.5, seed=11)
    b = sample_pd(0.5, seed=11)
    assert np.array_equal(a.weights, b.weights)
    c = sample_pd(0.5, seed=12)
    assert not np.array_equal(a.weights, c.weights)


def test_sample_pd_validation():
    for theta in (-0.1, 0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            sample_pd(theta, seed=0)
    with pytest.raises(ValueError):
        sample_pd(0.99, seed=0)  # too close to 1
    with pytest.raises(ValueError):
        sample_pd(0.5, seed=0, tail_tol=1e-2)
    with pytest.raises(ValueError):
        sample_pd(0.5, seed=0, tail_tol=0.0)


def test_sample_pd_small_theta_condenses():
    # theta -> 0 degenerates to a single atom
    largest = [sample_pd(0.05, seed=s).weights[0] for s in range(1000)]
    assert np.mean(largest) > 0.9


def test_sampler_matches_moment_kernel():
    # the batched power-sum kernel and the one-sample generator follow the
    # same counter-based stream
    q = _power_sum_table(0.6, 6, seed=42, tail_tol=1e-4, m_max=4)
    for i in range(6):
        pd = sample_pd(0.6, seed=42, index=i)
        for m in (2, 3, 4):
            assert q[i, m - 1] == pytest.approx(float(np.sum(pd.weights**m)), rel=1e-7)


def test_closed_form_moments():
    assert pd_moment_closed_form(0.5, 2) == 0.5
    assert pd_moment_closed_form(0.5, 3) == pytest.approx(0.375)
    # general product formula: prod_{j<m} (j - theta) / j
    theta = 0.3
    for m in (2, 3, 4, 5):
        want = math.prod((j - theta) / j for j in range(1, m))
        assert pd_moment_closed_form(theta, m) == pytest.approx(want, rel=1e-15)
    # theta -> 1 kills the second moment
    assert pd_moment_closed_form(1 - 1e-9, 2) == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(ValueError):
        pd_moment_closed_form(0.5, 1)


def test_third_moment_brute_force_confirms_recursion():
    # independent confirmation of the recursion value 0.375 at theta = 1/2:
    # average sum(w**3) over directly generated weight vectors
    n = 1500
    values = [float(np.sum(sample_pd(0.5, seed=77, index=i).weights ** 3)) for i in range(n)]
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n))
    assert abs(mean - 0.375) < 3 * stderr
    assert stderr < 0.02


def test_pd_power_moment_matches_closed_form():
    cases = [
        # theta close to 1 needs ~10^6 atoms per sample (the raw tail decays
        # like K**(-(1-theta)/theta)), so those cases run with few samples
        (0.5, 2, 4000, 1e-4),
        (0.5, 3, 4000, 1e-4),
        (0.25, 2, 4000, 1e-4),
        (2.0 / 3.0, 3, 1000, 1e-3),
        (0.8, 4, 150, 1e-3),
    ]
    for theta, m, n, tol in cases:
        est = pd_power_moment(theta, m, n_samples=n, seed=5, tail_tol=tol)
        want = pd_moment_closed_form(theta, m)
        assert abs(est.mean - want) < 3 * est.stderr


def test_pd_power_moment_validation():
    with pytest.raises(ValueError):
        pd_power_moment(0.5, 1)


def test_functional_constant_is_exact():
    one = fn.constant(3, 1.0)
    est = pd_overlap_functional(0.5, one, n_samples=200, seed=1)
    assert est.mean == pytest.approx(1.0, abs=1e-12)
    assert est.stderr < 1e-12


def test_functional_pair_equality_matches_second_moment():
    # s=2 with the equality indicator is the second moment, same samples
    est_f = pd_overlap_functional(0.5, fn.pair_equal_indicator(2), n_samples=2000, seed=9)
    est_m = pd_power_moment(0.5, 2, n_samples=2000, seed=9)
    assert est_f.mean == est_m.mean
    assert est_f.stderr == est_m.stderr
    assert abs(est_f.mean - 0.5) < 3 * est_f.stderr


def test_functional_three_replicas_all_equal():
    est = pd_overlap_functional(0.5, fn.all_equal_indicator(3), n_samples=4000, seed=13)
    assert abs(est.mean - 0.375) < 3 * est.stderr


def test_functional_requires_table():
    phi = fn.from_callable(2, lambda o: o[:, 0])
    with pytest.raises(ValueError):
        pd_overlap_functional(0.5, phi, n_samples=100, seed=0)


def test_gg_terms_against_brute_force():
    # term-by-term check of the identity estimator on a small weight vector
    rng = np.random.default_rng(21)
    w = rng.random(5)
    w /= w.sum()
    s, k = 3, 2
    q = np.array([[float(np.sum(w**m)) for m in range(1, s + 2)]])
    psi = (0.3, -0.8)
    phi = fn.random_tabulated(s, rng)

    def tuple_bits(tup, size):
        bits = 0
        for i, (a, b) in enumerate(fn.pair_order(size)):
            if tup[a] == tup[b]:
                bits |= 1 << i
        return bits

    def brute(size, value):
        total = 0.0
        for tup in itertools.product(range(w.size), repeat=size):
            weight = np.prod([w[t] for t in tup])
            total += weight * value(tup)
        return total

    t1, psi_b, phi_b, t3 = _gg_terms(q, s, k, psi, phi)
    want_t1 = brute(
        s + 1,
        lambda tup: (psi[1] if tup[k - 1] == tup[s] else psi[0])
        * phi.table[tuple_bits(tup[:s], s)],
    )
    want_psi = brute(2, lambda tup: psi[1] if tup[0] == tup[1] else psi[0])
    want_phi = brute(s, lambda tup: phi.table[tuple_bits(tup, s)])
    want_t3 = (
        sum(
            brute(
                s,
                lambda tup, l=l: (psi[1] if tup[k - 1] == tup[l - 1] else psi[0])
                * phi.table[tuple_bits(tup, s)],
            )
            for l in range(1, s + 1)
            if l != k
        )
        / s
    )
    assert float(t1[0]) == pytest.approx(want_t1, rel=1e-12)
    assert float(psi_b[0]) == pytest.approx(want_psi, rel=1e-12)
    assert float(phi_b[0]) == pytest.approx(want_phi, rel=1e-12)
    assert float(t3[0]) == pytest.approx(want_t3, rel=1e-12)


def test_gg_residual_constant_psi_exact_zero():
    for s, k in [(1, 1), (2, 1), (3, 2), (4, 4)]:
        phi = fn.random_tabulated(s, np.random.default_rng(s))
        r = gg_residual_pd(0.5, s, k, (0.6, 0.6), phi, n_samples=300, seed=2)
        assert r.mean <= 1e-14
        assert r.stderr <= 1e-14


def test_gg_residual_statistically_zero_equality_pair():
    r = gg_residual_pd(0.5, 2, 1, (0.0, 1.0), fn.pair_equal_indicator(2), n_samples=8000, seed=3)
    assert r.mean < 3 * r.stderr


def test_gg_residual_statistically_zero_random_s3():
    rng = np.random.default_rng(17)
    psi = tuple(rng.uniform(-1, 1, 2))
    phi = fn.random_tabulated(3, rng)
    r = gg_residual_pd(2.0 / 3.0, 3, 2, psi, phi, n_samples=1000, seed=4, tail_tol=1e-3)
    assert r.mean < 3 * r.stderr


def test_gg_residual_validation():
    phi = fn.pair_equal_indicator(2)
    with pytest.raises(ValueError):
        gg_residual_pd(0.5, 2, 3, (0, 1), phi, n_samples=100, seed=0)
    with pytest.raises(ValueError):
        gg_residual_pd(0.5, 3, 1, (0, 1), phi, n_samples=100, seed=0)
