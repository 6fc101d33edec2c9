"""Conjugate Dirichlet-multinomial probability computations.

Per-step count vectors over K latent classes are modelled as
Multinomial(theta, S) with theta ~ Dirichlet(alpha).  Everything a run-length
detector needs from that model lives here:

* the closed-form posterior update ``alpha' = alpha + counts``,
* the marginal ("predictive") probability of a new count vector with theta
  integrated out, in two algebraically equivalent forms: a log-Gamma ratio
  (``log_predictive_binomial``) and a factor product accumulated in log space
  (``log_predictive_stable``) that stays well-conditioned as the concentration
  total grows by S every step,
* the single-draw special case ``log_predictive_categorical`` used by the
  MAP-class baseline.

All probabilities are natural logs.  Class indices are 0-based throughout the
Python API; user-facing output (CSV headers, error messages) is 1-based.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .errors import ContractViolation, NumericalError

# Concentrations at or below this are rejected, never clamped: silent clamping
# would hide upstream misconfiguration.
ALPHA_FLOOR = 1e-12

__all__ = [
    "ALPHA_FLOOR",
    "validate_alpha",
    "validate_counts",
    "posterior_update",
    "log_predictive_stable",
    "log_predictive_stable_batch",
    "log_predictive_binomial",
    "log_predictive_categorical",
]


def validate_alpha(alpha) -> np.ndarray:
    """Return ``alpha`` as a float vector, checking the concentration contract.

    Requires K >= 2 components, all finite and strictly positive
    (> ``ALPHA_FLOOR``).
    """
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise ContractViolation(
            f"concentration vector must be 1-D with K >= 2 classes, got shape {a.shape}"
        )
    if not np.all(np.isfinite(a)):
        raise ContractViolation("concentration vector has non-finite components")
    if np.any(a < ALPHA_FLOOR):
        raise ContractViolation(
            f"concentration components must exceed {ALPHA_FLOOR:g}; "
            f"smallest was {a.min():g}"
        )
    return a


def validate_counts(counts, k: int | None = None) -> np.ndarray:
    """Return ``counts`` as an int64 vector of per-class tallies.

    Components must be non-negative integers; when ``k`` is given, the length
    must match it.
    """
    c = np.asarray(counts)
    if c.ndim != 1:
        raise ContractViolation(f"count vector must be 1-D, got shape {c.shape}")
    if not np.issubdtype(c.dtype, np.integer):
        rounded = np.rint(c)
        if not np.all(np.isfinite(c)) or np.any(rounded != c):
            raise ContractViolation("count vector must contain integers")
        c = rounded
    c = c.astype(np.int64)
    if np.any(c < 0):
        raise ContractViolation("count vector has negative components")
    if k is not None and c.size != k:
        raise ContractViolation(
            f"dimension mismatch: {c.size} count classes vs {k} concentration classes"
        )
    return c


def posterior_update(alpha, counts) -> np.ndarray:
    """Conjugate update: component-wise ``alpha + counts``, inputs untouched."""
    a = validate_alpha(alpha)
    c = validate_counts(counts, a.size)
    return a + c


def _require_draws(c: np.ndarray) -> int:
    s = int(c.sum())
    if s < 1:
        raise ContractViolation("count vector must contain at least one draw (S >= 1)")
    return s


def log_predictive_stable(alpha, counts) -> float:
    """Log marginal probability of ``counts`` with theta integrated out.

    Evaluated as a sum of per-draw log factors

        log[(alpha_k + j) / (S_alpha + C_k + j)] + log[(C_k + j + 1) / (j + 1)]

    over classes k and draws j = 0..counts[k]-1, where C_k is the running
    count total of earlier classes.  Individual factors are benign for any
    concentration total, so the accumulation cannot overflow where the
    log-Gamma ratio form loses accuracy.
    """
    a = validate_alpha(alpha)
    c = validate_counts(counts, a.size)
    _require_draws(c)
    s_alpha = float(a.sum())
    total = 0.0
    prefix = 0
    for k in range(c.size):
        ck = int(c[k])
        for j in range(ck):
            term = (
                np.log(a[k] + j)
                - np.log(s_alpha + prefix + j)
                + np.log(prefix + j + 1)
                - np.log(j + 1)
            )
            if not np.isfinite(term):
                raise NumericalError(
                    f"non-finite predictive factor at class {k + 1}, draw {j}"
                )
            total += term
        prefix += ck
    # total is a log-probability; shave off positive rounding residue
    return min(total, 0.0)


def log_predictive_stable_batch(alphas, counts) -> np.ndarray:
    """Vectorised ``log_predictive_stable`` over rows of ``alphas``.

    ``alphas`` is an (H, K) matrix of concentration vectors sharing one count
    vector; returns a length-H vector of log predictives.  This is the hot
    path of the run-length recursion (H grows with the stream).
    """
    a = np.asarray(alphas, dtype=float)
    if a.ndim != 2:
        raise ContractViolation(f"expected (H, K) concentration matrix, got {a.shape}")
    c = validate_counts(counts, a.shape[1])
    s = _require_draws(c)

    # classes repeated per draw, and the within-class draw index
    ks = np.repeat(np.arange(c.size), c)
    js = np.arange(s) - np.repeat(np.cumsum(c) - c, c)

    numer = np.log(a[:, ks] + js).sum(axis=1)
    denom = np.log(a.sum(axis=1)[:, None] + np.arange(s)).sum(axis=1)
    coeff = gammaln(s + 1) - gammaln(c + 1).sum()
    out = np.minimum(numer - denom + coeff, 0.0)
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise NumericalError(f"non-finite predictive for hypothesis row {bad}")
    return out


def log_predictive_binomial(alpha, counts) -> float:
    """Log predictive via the binomial-coefficient / log-Gamma ratio form.

    Equals ``log_predictive_stable`` analytically and serves as its
    cross-check; computed with ``gammaln`` rather than literal factorials
    (which overflow near S = 170).  Accuracy degrades for very large
    concentration totals, which is why the factor-product form exists.
    """
    a = validate_alpha(alpha)
    c = validate_counts(counts, a.size)
    s = _require_draws(c)
    s_alpha = a.sum()
    value = (
        gammaln(s + 1)
        + gammaln(s_alpha)
        - gammaln(s + s_alpha)
        + np.sum(gammaln(c + a) - gammaln(c + 1) - gammaln(a))
    )
    if not np.isfinite(value):
        raise NumericalError(
            f"Gamma-ratio predictive overflowed (concentration total {s_alpha:g})"
        )
    return min(float(value), 0.0)


def log_predictive_categorical(alpha, k: int) -> float:
    """Log predictive probability of observing class ``k`` in a single draw.

    The S = 1 special case of the count predictive: log(alpha_k / S_alpha).
    ``k`` is 0-based.
    """
    a = validate_alpha(alpha)
    if not 0 <= k < a.size:
        raise ContractViolation(
            f"class index {k} out of range for K={a.size} (0-based)"
        )
    return float(np.log(a[k]) - np.log(a.sum()))
