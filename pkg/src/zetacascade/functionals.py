"""Bounded functionals of replica overlap matrices.

An s-replica statistic is a function of the s(s-1)/2 upper-triangle
overlaps, either tabulated on binary matrices (the cascade limit, where
overlaps are exactly 0 or 1) or a callable on real matrices (the finite-T
field).  Pairs are ordered like itertools.combinations: (0,1), (0,2), ...

The set-partition helpers support the exact evaluation of s-fold weighted
sums over cascade atoms via power sums of the weights.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

TABLE = "tabulated-on-binary-matrices"
CALLABLE = "callable-on-real-matrices"


def pair_order(s: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(s), 2))


def n_pairs(s: int) -> int:
    return s * (s - 1) // 2


@dataclass(frozen=True)
class OverlapFunctionalSpec:
    """A bounded functional of the overlaps of s replicas."""

    s: int
    kind: str
    table: tuple[float, ...] | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"s must be >= 1, got {self.s}")
        if self.kind == TABLE:
            if self.table is None or len(self.table) != 2 ** n_pairs(self.s):
                raise ValueError(
                    f"tabulated functional of s={self.s} needs 2**{n_pairs(self.s)} entries"
                )
        elif self.kind == CALLABLE:
            if self.func is None:
                raise ValueError("callable functional needs a function")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def table_array(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.float64)

    def value_from_bits(self, bits: int) -> float:
        return self.table[bits]

    def evaluate_real(self, overlaps: np.ndarray) -> np.ndarray:
        """Evaluate on raw real overlaps, shape (n, n_pairs) -> (n,)."""
        if self.kind != CALLABLE:
            raise ValueError("tabulated functionals need band_round on real overlaps")
        out = np.asarray(self.func(overlaps), dtype=np.float64)
        if out.shape != (overlaps.shape[0],):
            raise ValueError("callable must map (n, n_pairs) -> (n,)")
        return out

    def band_round(self, overlaps: np.ndarray, epsilon: float):
        """Round real overlaps into the binary domain of a tabulated functional.

        Entries >= 1 - epsilon map to 1 and <= epsilon map to 0; rows with
        any mid-band entry are excluded.  Returns (values, valid_mask).
        """
        if self.kind != TABLE:
            raise ValueError("band_round applies to tabulated functionals")
        if not 0.0 < epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
        n = overlaps.shape[0]
        if len(set(self.table)) == 1:
            # constant functionals never look at the overlaps
            return np.full(n, self.table[0]), np.ones(n, dtype=bool)
        high = overlaps >= 1.0 - epsilon
        low = overlaps <= epsilon
        valid = np.all(high | low, axis=1)
        idx = np.zeros(overlaps.shape[0], dtype=np.int64)
        for i in range(overlaps.shape[1]):
            idx |= high[:, i].astype(np.int64) << i
        values = self.table_array[idx]
        return values, valid


def tabulated(s: int, table) -> OverlapFunctionalSpec:
    return OverlapFunctionalSpec(s=s, kind=TABLE, table=tuple(float(v) for v in table))


def from_callable(s: int, func) -> OverlapFunctionalSpec:
    return OverlapFunctionalSpec(s=s, kind=CALLABLE, func=func)


def constant(s: int, value: float = 1.0) -> OverlapFunctionalSpec:
    return tabulated(s, [value] * 2 ** n_pairs(s))


def all_equal_indicator(s: int) -> OverlapFunctionalSpec:
    """1 when every pair of replicas shares an atom (all overlaps 1)."""
    m = n_pairs(s)
    full = 2**m - 1
    return tabulated(s, [1.0 if i == full else 0.0 for i in range(2**m)])


def pair_equal_indicator(s: int, pair: tuple[int, int] = (0, 1)) -> OverlapFunctionalSpec:
    """1 when one chosen pair of replicas shares an atom."""
    pairs = pair_order(s)
    bit = pairs.index((min(pair), max(pair)))
    return tabulated(s, [float(i >> bit & 1) for i in range(2 ** n_pairs(s))])


def random_tabulated(s: int, rng: np.random.Generator, low=-1.0, high=1.0) -> OverlapFunctionalSpec:
    return tabulated(s, rng.uniform(low, high, size=2 ** n_pairs(s)))


def permuted_table(phi: OverlapFunctionalSpec, perm) -> OverlapFunctionalSpec:
    """The functional with replica slots relabeled by perm."""
    if phi.kind != TABLE:
        raise ValueError("only tabulated functionals can be permuted")
    pairs = pair_order(phi.s)
    index_of = {p: i for i, p in enumerate(pairs)}
    new_table = []
    for bits in range(2 ** n_pairs(phi.s)):
        permuted_bits = 0
        for i, (a, b) in enumerate(pairs):
            pa, pb = perm[a], perm[b]
            j = index_of[(min(pa, pb), max(pa, pb))]
            if bits >> i & 1:
                permuted_bits |= 1 << j
        new_table.append(phi.table[permuted_bits])
    return tabulated(phi.s, new_table)


# ---------------------------------------------------------------------------
# set partitions


@lru_cache(maxsize=None)
def set_partitions(n: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All partitions of {0..n-1} into blocks, coarsest (fewest blocks) first."""
    if n > 7:
        raise ValueError(f"partition enumeration supports n <= 7, got {n}")

    def gen(elements):
        if not elements:
            yield ()
            return
        first, rest = elements[0], elements[1:]
        for sub in itertools.chain.from_iterable(
            itertools.combinations(rest, r) for r in range(len(rest) + 1)
        ):
            block = (first,) + sub
            remaining = tuple(e for e in rest if e not in sub)
            for tail in gen(remaining):
                yield (block,) + tail

    parts = [tuple(sorted(p, key=lambda b: b[0])) for p in gen(tuple(range(n)))]
    parts.sort(key=len)
    return tuple(parts)


def partition_bits(partition, s: int) -> int:
    """Binary upper-triangle index of the overlap matrix induced by a partition."""
    block_of = {}
    for bi, block in enumerate(partition):
        for e in block:
            block_of[e] = bi
    bits = 0
    for i, (a, b) in enumerate(pair_order(s)):
        if block_of[a] == block_of[b]:
            bits |= 1 << i
    return bits


def _refines(fine, coarse) -> bool:
    big = [set(b) for b in coarse]
    for block in fine:
        bs = set(block)
        if not any(bs <= b for b in big):
            return False
    return True


@lru_cache(maxsize=None)
def partition_structure(n: int):
    """Partitions with, for each, the indices of its strictly coarser partitions.

    Ordered so every coarser partition precedes its refinements, which lets
    exact-pattern sums be peeled off the plain block products:
    S_P = prod_over_blocks(q_size) - sum of S_Q over Q strictly coarser.
    """
    parts = set_partitions(n)
    coarser = []
    for i, p in enumerate(parts):
        idx = [j for j, q in enumerate(parts) if len(q) < len(p) and _refines(p, q)]
        coarser.append(tuple(idx))
    return parts, tuple(coarser)


def exact_pattern_sums(n: int, q: np.ndarray) -> list[np.ndarray]:
    """For each partition P of {0..n-1}, the weighted sum over index tuples
    whose coincidence pattern is exactly P.

    q has shape (n_samples, m_max) with column m-1 holding the power sum
    sum_k w_k**m; column 0 must be the total mass (1 for probability weights).
    """
    parts, coarser = partition_structure(n)
    sums: list[np.ndarray] = []
    for p, coarse_idx in zip(parts, coarser):
        prod = np.ones(q.shape[0])
        for block in p:
            prod = prod * q[:, len(block) - 1]
        for j in coarse_idx:
            prod = prod - sums[j]
        sums.append(prod)
    return sums
