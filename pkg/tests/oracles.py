"""Independent reference implementations used to check the library.

Everything here is deliberately written the slow, obvious way and shares
no code with the package internals.
"""

from __future__ import annotations

import math

import numpy as np


def is_prime_trial_division(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def primes_by_boolean_sieve(limit: int) -> list[int]:
    """Plain one-shot boolean sieve (not segmented)."""
    if limit < 2:
        return []
    flags = bytearray([1]) * (limit + 1)
    flags[0] = flags[1] = 0
    for p in range(2, int(math.isqrt(limit)) + 1):
        if flags[p]:
            flags[p * p :: p] = bytearray(len(flags[p * p :: p]))
    return [i for i, f in enumerate(flags) if f]


def naive_field_values(phases, primes, h_values) -> np.ndarray:
    """Direct per-term cosine summation of the field at each h."""
    p = np.asarray(primes, dtype=np.float64)
    log_p = np.log(p)
    amp = 1.0 / np.sqrt(p)
    out = np.empty(len(h_values))
    for j, h in enumerate(h_values):
        out[j] = float(np.sum(np.cos(phases - h * log_p) * amp))
    return out


def naive_covariance(h, h2, primes) -> float:
    total = 0.0
    for p in primes:
        total += math.cos(abs(h - h2) * math.log(p)) / (2.0 * p)
    return total


def naive_tuple_functional(weights, s, value_of_tuple) -> float:
    """Brute-force sum over all index tuples of a weight vector."""
    import itertools

    total = 0.0
    for tup in itertools.product(range(len(weights)), repeat=s):
        w = 1.0
        for k in tup:
            w *= weights[k]
        total += w * value_of_tuple(tup)
    return total
