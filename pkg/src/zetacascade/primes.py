"""Prime sets indexing the random field, and the truncation cutoffs.

Truncation level ``alpha`` in [0, 1] maps to the prime cutoff
``exp((log T)**alpha)``; the field restricted to level ``alpha`` sums over
primes up to that cutoff, inclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SEGMENT = 1 << 22  # numbers per sieve segment; keeps peak memory a few MB
_MAX_LIMIT = 10**9

_cache: dict[int, np.ndarray] = {}
_CACHE_SLOTS = 8


@dataclass(frozen=True)
class PrimeSet:
    """All primes <= limit, ascending."""

    limit: float
    primes: np.ndarray

    def __len__(self) -> int:
        return int(self.primes.size)

    def prefix(self, cutoff: float) -> "PrimeSet":
        """Primes <= cutoff, as a prefix view of this set."""
        hi = int(np.searchsorted(self.primes, math.floor(cutoff), side="right"))
        return PrimeSet(limit=float(cutoff), primes=self.primes[:hi])


def _simple_sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def _segmented_sieve(limit: int) -> np.ndarray:
    base = _simple_sieve(math.isqrt(limit))
    chunks = [base[base <= limit]] if base.size else []
    lo = math.isqrt(limit) + 1
    while lo <= limit:
        hi = min(lo + _SEGMENT, limit + 1)  # exclusive
        mask = np.ones(hi - lo, dtype=bool)
        for p in base:
            start = max(p * p, ((lo + p - 1) // p) * p)
            if start < hi:
                mask[start - lo :: p] = False
        chunks.append((np.flatnonzero(mask) + lo).astype(np.int64))
        lo = hi
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)


def sieve(limit: float) -> PrimeSet:
    """All primes <= floor(limit).  Results are cached and shared read-only."""
    if limit < 0 or math.isnan(limit):
        raise ValueError(f"limit must be nonnegative, got {limit}")
    if limit > _MAX_LIMIT:
        raise ValueError(f"limit {limit:g} exceeds the supported maximum {_MAX_LIMIT:g}")
    n = int(math.floor(limit))
    for cached_n, primes in _cache.items():
        if cached_n >= n:
            hi = int(np.searchsorted(primes, n, side="right"))
            return PrimeSet(limit=float(limit), primes=primes[:hi])
    primes = _segmented_sieve(n)
    if len(_cache) >= _CACHE_SLOTS:
        _cache.pop(min(_cache))
    _cache[n] = primes
    return PrimeSet(limit=float(limit), primes=primes)


def clear_sieve_cache() -> None:
    _cache.clear()


def cutoff_for_alpha(T: float, alpha: float) -> float:
    """Prime cutoff exp((log T)**alpha) of truncation level alpha.

    The endpoints are pinned exactly: alpha=0 gives e, alpha=1 gives T.
    """
    if T <= math.e:
        raise ValueError(f"T must exceed e, got {T}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0.0:
        return math.e
    if alpha == 1.0:
        return float(T)
    return math.exp(math.log(T) ** alpha)


def save_prime_cache(path: str, prime_set: PrimeSet) -> None:
    """Write little-endian int64 cache: header = floor(limit), then primes."""
    header = np.array([int(math.floor(prime_set.limit))], dtype="<i8")
    with open(path, "wb") as fh:
        header.tofile(fh)
        prime_set.primes.astype("<i8").tofile(fh)


def load_prime_cache(path: str, limit: float | None = None) -> PrimeSet:
    """Read a prime cache file; optionally slice down to a smaller limit."""
    raw = np.fromfile(path, dtype="<i8")
    if raw.size < 1:
        raise ValueError(f"prime cache {path!r} is empty")
    cached_limit = int(raw[0])
    primes = raw[1:].astype(np.int64)
    ps = PrimeSet(limit=float(cached_limit), primes=primes)
    if limit is None:
        return ps
    if limit > cached_limit:
        raise ValueError(f"cache covers primes <= {cached_limit}, requested {limit:g}")
    return ps.prefix(limit)
