"""Pseudo-observations from per-step latent-class posteriors.

A change-point engine consumes integer count vectors, not probability
vectors.  This module converts a posterior p(z_t | x_t) into either its MAP
class (single point-estimate baseline) or an S-sample multinomial count
vector (the sampling extension).
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import ContractViolation

logger = logging.getLogger(__name__)

# |sum - 1| within REJECT_TOL is accepted after renormalisation (upstream EM
# providers emit small drift); anything worse is a contract violation.
STRICT_TOL = 1e-9
REJECT_TOL = 1e-6

__all__ = ["STRICT_TOL", "REJECT_TOL", "seeded_rng", "as_posterior", "map_class", "sample_counts", "one_hot_counts"]


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic generator (PCG64) for a 64-bit seed."""
    return np.random.default_rng(seed)


def as_posterior(probs) -> np.ndarray:
    """Validate a categorical posterior, renormalising small drift.

    Components must be non-negative and sum to 1 within ``STRICT_TOL``;
    deviations up to ``REJECT_TOL`` are renormalised with a logged warning,
    larger ones rejected.
    """
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ContractViolation(f"posterior must be 1-D with K >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ContractViolation("posterior has negative or non-finite components")
    dev = abs(p.sum() - 1.0)
    if dev > REJECT_TOL:
        raise ContractViolation(f"posterior fails normalization: |sum - 1| = {dev:.3g}")
    if dev > STRICT_TOL:
        logger.warning("renormalizing drifted posterior: |sum - 1| = %.3g", dev)
        p = p / p.sum()
    return p


def map_class(probs) -> int:
    """MAP class of a posterior (0-based); ties go to the lowest index."""
    p = as_posterior(probs)
    return int(np.argmax(p))


def sample_counts(probs, s: int, rng: np.random.Generator) -> np.ndarray:
    """Count vector of ``s`` independent draws from the posterior.

    Draws are inverse-CDF lookups against the precomputed cumulative
    distribution (binary search, O(s log K)); the result sums to ``s`` and is
    deterministic given the generator state.
    """
    p = as_posterior(probs)
    if s < 1:
        raise ContractViolation(f"sample size must be >= 1, got {s}")
    cdf = np.cumsum(p)
    idx = np.searchsorted(cdf, rng.random(s), side="right")
    idx = np.minimum(idx, p.size - 1)  # guard the cdf's rounding shortfall at 1.0
    return np.bincount(idx, minlength=p.size).astype(np.int64)


def one_hot_counts(k: int, size: int) -> np.ndarray:
    """Single-draw count vector for class ``k`` (the MAP pseudo-observation)."""
    if not 0 <= k < size:
        raise ContractViolation(f"class index {k} out of range for K={size}")
    c = np.zeros(size, dtype=np.int64)
    c[k] = 1
    return c
