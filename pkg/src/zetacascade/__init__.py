"""Monte Carlo simulation and verification engine for the prime-phase
random field: Gibbs measures and overlap distributions at finite T,
closed-form free energy limits, and exact Poisson-Dirichlet cascade
counterparts."""

from .primes import PrimeSet, cutoff_for_alpha, sieve
from .field import (
    DisorderSample,
    FieldGrid,
    default_grid_size,
    evaluate_field,
    overlap_asymptotic,
    overlap_exact,
    overlap_grid_table,
    sample_disorder,
    variance_of_truncation,
    covariance_truncated,
)

__version__ = "0.1.0"
