import itertools

import numpy as np
import pytest

from zetacascade import functionals as fn


def test_pair_order_matches_combinations():
    assert fn.pair_order(3) == [(0, 1), (0, 2), (1, 2)]
    assert fn.n_pairs(4) == 6


def test_tabulated_needs_full_table():
    with pytest.raises(ValueError):
        fn.tabulated(3, [1.0, 2.0])  # needs 8 entries
    phi = fn.tabulated(2, [0.25, 0.75])
    assert phi.value_from_bits(1) == 0.75


def test_constant_and_indicators():
    one = fn.constant(3, 1.0)
    assert all(v == 1.0 for v in one.table)
    eq = fn.all_equal_indicator(3)
    assert eq.table[7] == 1.0 and sum(eq.table) == 1.0
    pair = fn.pair_equal_indicator(3, (0, 1))
    # bit 0 is the (0,1) pair
    assert [pair.table[i] for i in range(8)] == [0, 1, 0, 1, 0, 1, 0, 1]


def test_callable_evaluation():
    phi = fn.from_callable(2, lambda o: o[:, 0] ** 2)
    vals = phi.evaluate_real(np.array([[0.5], [2.0]]))
    np.testing.assert_allclose(vals, [0.25, 4.0])


def test_band_round_excludes_middle():
    phi = fn.tabulated(2, [10.0, 20.0])
    overlaps = np.array([[0.05], [0.95], [0.5], [-0.3]])
    vals, valid = phi.band_round(overlaps, 0.2)
    assert valid.tolist() == [True, True, False, True]
    assert vals[0] == 10.0 and vals[1] == 20.0 and vals[3] == 10.0


def test_band_round_constant_table_never_excludes():
    phi = fn.constant(2, 3.0)
    vals, valid = phi.band_round(np.array([[0.5], [0.3]]), 0.2)
    assert valid.all()
    assert np.all(vals == 3.0)


def test_permuted_table_swaps_pairs():
    rng = np.random.default_rng(0)
    phi = fn.random_tabulated(3, rng)
    sigma = (1, 2, 0)
    inverse = tuple(np.argsort(sigma))
    permuted = fn.permuted_table(phi, sigma)
    # the permuted functional evaluated on a pattern M equals the original
    # on the matrix with entries M[inv(a), inv(b)]
    for bits in range(8):
        matrix = np.eye(3)
        for i, (a, b) in enumerate(fn.pair_order(3)):
            matrix[a, b] = matrix[b, a] = bits >> i & 1
        relabeled = matrix[np.ix_(inverse, inverse)]
        rbits = 0
        for i, (a, b) in enumerate(fn.pair_order(3)):
            if relabeled[a, b]:
                rbits |= 1 << i
        assert permuted.table[bits] == phi.table[rbits]


def test_set_partitions_bell_numbers():
    for n, bell in [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52), (6, 203), (7, 877)]:
        assert len(fn.set_partitions(n)) == bell
    with pytest.raises(ValueError):
        fn.set_partitions(8)


def test_set_partitions_cover_and_disjoint():
    for part in fn.set_partitions(4):
        flat = sorted(e for block in part for e in block)
        assert flat == [0, 1, 2, 3]


def test_partition_bits():
    # partition {0,2},{1} of 3 elements: only the (0,2) pair coincides
    bits = fn.partition_bits(((0, 2), (1,)), 3)
    assert bits == 1 << fn.pair_order(3).index((0, 2))


def test_exact_pattern_sums_match_brute_force():
    # the partition decomposition reproduces brute-force tuple sums for an
    # arbitrary weight vector and arbitrary tabulated functionals
    rng = np.random.default_rng(3)
    w = rng.random(6)
    w /= w.sum()
    m_max = 5
    q = np.array([[np.sum(w**m) for m in range(1, m_max + 1)]])
    for s in (2, 3, 4, 5):
        sums = fn.exact_pattern_sums(s, q[:, :s])
        parts, _ = fn.partition_structure(s)
        phi = fn.random_tabulated(s, rng)
        dp_value = sum(
            phi.table[fn.partition_bits(p, s)] * float(v) for p, v in zip(parts, sums)
        )
        brute = 0.0
        for tup in itertools.product(range(w.size), repeat=s):
            weight = np.prod([w[t] for t in tup])
            bits = 0
            for i, (a, b) in enumerate(fn.pair_order(s)):
                if tup[a] == tup[b]:
                    bits |= 1 << i
            brute += weight * phi.table[bits]
        assert dp_value == pytest.approx(brute, rel=1e-12)


def test_exact_pattern_sums_total_is_one():
    # summing over all coincidence patterns recovers the normalization
    rng = np.random.default_rng(9)
    w = rng.random(30)
    w /= w.sum()
    q = np.array([[np.sum(w**m) for m in range(1, 6)]])
    q[0, 0] = 1.0
    for s in (2, 3, 4, 5):
        total = sum(float(v) for v in fn.exact_pattern_sums(s, q[:, :s]))
        assert total == pytest.approx(1.0, abs=1e-12)
