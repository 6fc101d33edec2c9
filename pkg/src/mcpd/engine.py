"""Online run-length recursion over count-vector pseudo-observations.

The engine maintains one hypothesis per possible run length r_t (steps since
the last change point) with its unnormalised log joint weight
log p(r_t, c_{1:t}) and a per-hypothesis Dirichlet concentration holding the
counts absorbed since that hypothesis's segment began.  Each step:

* the growth branch extends every hypothesis (r -> r+1), weighting by the
  no-change prior and that hypothesis's count predictive;
* the change branch collapses all previous mass into r = 0, weighting by the
  change prior and the predictive under the fresh prior concentration (a new
  segment has seen no data);
* every surviving hypothesis then absorbs the step's counts
  (``alpha += c``; the new r = 0 hypothesis starts from the prior).

r_t = 0 therefore means "a new segment began at step t and c_t is its first
observation".  With a constant hazard this recursion reproduces, exactly, the
joint obtained by enumerating every change-point configuration under a
geometric segment-length prior, which is how the engine is tested.

Weights are carried as raw log joints; the cumulative log evidence is their
log-sum-exp, so long streams drift linearly in log space and never underflow.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .dirichlet_multinomial import (
    log_predictive_stable_batch,
    validate_alpha,
    validate_counts,
)
from .errors import ContractViolation, NumericalError

_LN10 = math.log(10.0)

__all__ = ["HazardSpec", "RunLengthPosterior", "RunLengthEngine"]


@dataclass(frozen=True)
class HazardSpec:
    """Constant change-point hazard h = 1/lambda per step.

    Parameterised by log10(lambda) so that priors like lambda = 10^300,
    whose reciprocal is at the edge of double precision, stay exact in log
    space.  Requires lambda > 1.
    """

    log10_lambda: float

    def __post_init__(self):
        if not np.isfinite(self.log10_lambda) or self.log10_lambda <= 0:
            raise ContractViolation(
                f"hazard requires lambda > 1 (log10 lambda > 0), got {self.log10_lambda!r}"
            )

    @classmethod
    def from_lambda(cls, lam: float) -> "HazardSpec":
        if not np.isfinite(lam) or lam <= 1.0:
            raise ContractViolation(f"lambda must be a finite real > 1, got {lam!r}")
        return cls(math.log10(lam))

    @property
    def lam(self) -> float:
        """lambda itself; may overflow to inf for extreme exponents."""
        return 10.0 ** self.log10_lambda

    @property
    def log_change(self) -> float:
        """log h = -log10(lambda) * ln 10."""
        return -self.log10_lambda * _LN10

    @property
    def log_growth(self) -> float:
        """log(1 - h), exact to double precision even when h underflows."""
        return math.log1p(-math.exp(self.log_change))


@dataclass
class RunLengthPosterior:
    """Normalised run-length posterior at time ``t``: run length -> probability."""

    t: int
    probs: dict[int, float] = field(repr=False)

    def __post_init__(self):
        total = sum(self.probs.values())
        if abs(total - 1.0) > 1e-9:
            raise ContractViolation(f"run-length posterior sums to {total!r}, not 1")

    def map(self) -> int:
        """MAP run length; ties resolved toward the larger run length."""
        best = max(self.probs.items(), key=lambda kv: (kv[1], kv[0]))
        return best[0]


class RunLengthEngine:
    """Sequential state machine over run-length hypotheses.

    Parameters
    ----------
    k : number of latent classes.
    hazard : constant-hazard prior on change points.
    alpha0 : prior concentration for a fresh segment; defaults to the
        uniform (1, ..., 1), the least-informative conjugate choice.

    ``step`` calls on one engine must be strictly ordered; distinct engines
    are independent and may run concurrently.
    """

    def __init__(self, k: int, hazard: HazardSpec, alpha0=None):
        if not isinstance(hazard, HazardSpec):
            raise ContractViolation("hazard must be a HazardSpec")
        if alpha0 is None:
            alpha0 = np.ones(k)
        self.alpha0 = validate_alpha(alpha0)
        if self.alpha0.size != k:
            raise ContractViolation(
                f"alpha0 has {self.alpha0.size} classes, expected K={k}"
            )
        self.k = int(k)
        self.hazard = hazard
        self.t = 0
        self.pruned = False
        self.last_log_evidence_increment: float | None = None
        self._run_lengths = np.array([0], dtype=np.int64)
        self._log_joint = np.array([0.0])
        self._alphas = self.alpha0[None, :].copy()

    # -- read-only views ---------------------------------------------------

    @property
    def run_lengths(self) -> np.ndarray:
        return self._run_lengths.copy()

    @property
    def log_joint(self) -> np.ndarray:
        """Unnormalised log p(r_t, c_{1:t}) per hypothesis."""
        return self._log_joint.copy()

    @property
    def hypothesis_alphas(self) -> np.ndarray:
        return self._alphas.copy()

    @property
    def log_evidence(self) -> float:
        """Cumulative log p(c_{1:t}); 0 before any data."""
        return float(logsumexp(self._log_joint))

    def posterior(self) -> RunLengthPosterior:
        probs = np.exp(self._log_joint - logsumexp(self._log_joint))
        return RunLengthPosterior(
            self.t, {int(r): float(p) for r, p in zip(self._run_lengths, probs)}
        )

    def map_runlength(self) -> int:
        """argmax of the run-length posterior, ties toward larger run length."""
        # hypotheses are stored in ascending run-length order, so the last
        # occurrence of the maximum is the tie-break winner
        rev = self._log_joint[::-1]
        return int(self._run_lengths[self._log_joint.size - 1 - int(np.argmax(rev))])

    # -- the recursion -----------------------------------------------------

    def step(self, counts) -> RunLengthPosterior:
        """Absorb one count vector and return the updated posterior.

        The log evidence increment log p(c_t | c_{1:t-1}) is retained in
        ``last_log_evidence_increment``.
        """
        c = validate_counts(counts, self.k)
        if c.sum() < 1:
            raise ContractViolation("count vector must contain at least one draw")

        log_pred = log_predictive_stable_batch(self._alphas, c)
        log_pred_prior = log_predictive_stable_batch(self.alpha0[None, :], c)[0]
        prev_total = logsumexp(self._log_joint)

        grown = self._log_joint + self.hazard.log_growth + log_pred
        changed = prev_total + self.hazard.log_change + log_pred_prior
        log_joint = np.concatenate(([changed], grown))

        total = logsumexp(log_joint)
        if not np.isfinite(total):
            raise NumericalError(
                f"every run-length branch underflowed at step {self.t + 1}"
            )

        self._run_lengths = np.concatenate(([0], self._run_lengths + 1))
        self._alphas = np.vstack((self.alpha0 + c, self._alphas + c))
        self._log_joint = log_joint
        self.last_log_evidence_increment = float(total - prev_total)
        self.t += 1
        return self.posterior()

    def prune(self, epsilon: float = -math.inf, cap: int | None = None) -> "RunLengthEngine":
        """Drop negligible hypotheses.

        Hypotheses with normalised posterior below exp(``epsilon``) are
        removed, then the lowest-weight survivors beyond ``cap`` (ties kept
        toward larger run lengths, matching the MAP rule).  Dropped mass is
        simply discarded: the evidence shrinks accordingly and ``pruned`` is
        flagged, marking all later evidence values as approximate.
        """
        if epsilon > 0:
            raise ContractViolation(f"epsilon is a log weight and must be <= 0, got {epsilon}")
        if cap is not None and cap < 1:
            raise ContractViolation(f"cap must be >= 1, got {cap}")

        log_post = self._log_joint - logsumexp(self._log_joint)
        keep = log_post >= epsilon
        if not keep.any():
            raise ContractViolation("pruning would remove every hypothesis")
        idx = np.flatnonzero(keep)
        if cap is not None and idx.size > cap:
            order = np.lexsort((self._run_lengths[idx], log_post[idx]))
            idx = np.sort(idx[order[-cap:]])
        if idx.size < self._log_joint.size:
            self._run_lengths = self._run_lengths[idx]
            self._log_joint = self._log_joint[idx]
            self._alphas = self._alphas[idx]
            self.pruned = True
        return self

    # -- checkpoint / resume -------------------------------------------------

    def to_json(self) -> str:
        """Serialise the full state; floats round-trip exactly (repr digits)."""
        doc = {
            "t": self.t,
            "k": self.k,
            "hazard": {"log10_lambda": self.hazard.log10_lambda},
            "alpha0": self.alpha0.tolist(),
            "pruned": self.pruned,
            "last_log_evidence_increment": self.last_log_evidence_increment,
            "hypotheses": [
                {
                    "run_length": int(r),
                    "log_joint": float(w),
                    "alpha": a.tolist(),
                }
                for r, w, a in zip(self._run_lengths, self._log_joint, self._alphas)
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, doc: str) -> "RunLengthEngine":
        state = json.loads(doc)
        engine = cls(
            state["k"],
            HazardSpec(state["hazard"]["log10_lambda"]),
            np.asarray(state["alpha0"]),
        )
        hyps = state["hypotheses"]
        if not hyps:
            raise ContractViolation("snapshot contains no hypotheses")
        engine.t = int(state["t"])
        engine.pruned = bool(state["pruned"])
        engine.last_log_evidence_increment = state["last_log_evidence_increment"]
        engine._run_lengths = np.array([h["run_length"] for h in hyps], dtype=np.int64)
        engine._log_joint = np.array([h["log_joint"] for h in hyps], dtype=float)
        engine._alphas = np.array([h["alpha"] for h in hyps], dtype=float)
        if engine._alphas.shape[1] != engine.k:
            raise ContractViolation("snapshot hypothesis dimensions disagree with K")
        return engine
