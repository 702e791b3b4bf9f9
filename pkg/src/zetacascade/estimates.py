"""Monte Carlo bookkeeping: two-level estimates with honest standard errors.

The outer level (disorder realizations or cascade samples) carries the
statistical error; inner replica draws only reduce within-realization
noise.  Standard errors therefore always come from outer-level batch
means, never from pooled inner draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n_outer: int
    n_inner: int
    seed_base: int

    def __str__(self) -> str:
        return f"{self.mean:.6g} +/- {self.stderr:.2g} (n={self.n_outer}x{self.n_inner})"


def mc_aggregate(batch_values, n_inner: int = 1, seed_base: int = 0) -> MCEstimate:
    """Mean of outer-batch means with stderr = std(batches)/sqrt(n_batches)."""
    values = np.asarray(batch_values, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("batch values must be one-dimensional")
    n = values.size
    if n < 2:
        raise ValueError("need at least 2 outer batches for a standard error")
    return MCEstimate(
        mean=float(values.mean()),
        stderr=float(values.std(ddof=1) / math.sqrt(n)),
        n_outer=n,
        n_inner=int(n_inner),
        seed_base=int(seed_base),
    )


def aggregate_abs(batch_values, n_inner: int = 1, seed_base: int = 0) -> MCEstimate:
    """|mean| of signed batch values, stderr of the signed mean.

    Used for identity residuals: the magnitude is reported, the noise
    scale is that of the signed gap.
    """
    est = mc_aggregate(batch_values, n_inner, seed_base)
    return MCEstimate(
        mean=abs(est.mean),
        stderr=est.stderr,
        n_outer=est.n_outer,
        n_inner=est.n_inner,
        seed_base=est.seed_base,
    )


def pooled_stderr(a: MCEstimate, b: MCEstimate) -> float:
    return math.hypot(a.stderr, b.stderr)


def trend_nonincreasing(estimates, allow_inversions: int = 1, sigma: float = 2.0) -> bool:
    """Check a sequence of estimates for a nonincreasing trend.

    Up to allow_inversions consecutive increases are tolerated when the
    increase stays within sigma pooled standard errors.
    """
    inversions = 0
    for prev, cur in zip(estimates, estimates[1:]):
        if cur.mean > prev.mean:
            if cur.mean - prev.mean > sigma * pooled_stderr(prev, cur):
                return False
            inversions += 1
            if inversions > allow_inversions:
                return False
    return True
