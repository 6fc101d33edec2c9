"""Piecewise-stationary synthetic posterior sequences with known change points.

Each partition gets a concentration vector beta drawn component-wise from
Uniform(0, eta); every step inside the partition emits an independent
Dirichlet(beta) draw as that step's latent-class posterior.  Small eta makes
the Dirichlet spread posteriors across the whole simplex (noisy, hard to
segment); large eta pins each partition's posteriors near its mean
proportions (easy to segment).

Steps are indexed 0..T-1; a change point at step t means step t is the first
draw of a new partition.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ContractViolation, DataFormatError

logger = logging.getLogger(__name__)

BETA_FLOOR = 1e-12

__all__ = [
    "SyntheticConfig",
    "GroundTruth",
    "generate",
    "flatness_stats",
    "write_posteriors_csv",
    "read_posteriors_csv",
    "write_ground_truth",
    "read_ground_truth",
]


@dataclass(frozen=True)
class SyntheticConfig:
    k: int = 20
    segment_length: int = 100
    num_partitions: int = 6
    eta: float = 3.0
    samples: int | None = None  # echoed downstream; the generator itself emits posteriors
    seed: int = 0

    @property
    def total_steps(self) -> int:
        return self.segment_length * self.num_partitions

    def validate(self) -> "SyntheticConfig":
        if self.k < 2:
            raise ContractViolation(f"K must be >= 2, got {self.k}")
        if self.segment_length < 1 or self.num_partitions < 1:
            raise ContractViolation("segment_length and num_partitions must be >= 1")
        if not np.isfinite(self.eta) or self.eta <= 0:
            raise ContractViolation(f"eta must be > 0, got {self.eta}")
        if self.samples is not None and self.samples < 1:
            raise ContractViolation(f"samples must be >= 1 when given, got {self.samples}")
        return self


@dataclass
class GroundTruth:
    """True change-point steps and the per-partition concentrations."""

    cp_times: list[int]
    beta: np.ndarray = field(repr=False)  # (num_partitions, K)


def _draw_beta(rng: np.random.Generator, k: int, eta: float) -> np.ndarray:
    beta = rng.uniform(0.0, eta, k)
    # the open interval (0, eta) cannot produce 0 in exact math, but floats can
    low = beta < BETA_FLOOR
    while low.any():
        beta[low] = rng.uniform(0.0, eta, int(low.sum()))
        low = beta < BETA_FLOOR
    return beta


def _draw_theta(rng: np.random.Generator, beta: np.ndarray) -> np.ndarray:
    # Dirichlet via normalised Gammas; tiny concentrations can underflow every
    # component to exactly 0, in which case the draw is repeated
    while True:
        g = rng.standard_gamma(beta)
        total = g.sum()
        if total > 0.0:
            return g / total
        logger.warning("all-zero Gamma draw (beta min %.3g); resampling", beta.min())


def generate(cfg: SyntheticConfig) -> tuple[np.ndarray, GroundTruth]:
    """Emit the (T, K) posterior sequence and its ground truth for ``cfg``."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    posteriors = np.empty((cfg.total_steps, cfg.k))
    betas = np.empty((cfg.num_partitions, cfg.k))
    for p in range(cfg.num_partitions):
        beta = _draw_beta(rng, cfg.k, cfg.eta)
        betas[p] = beta
        start = p * cfg.segment_length
        for i in range(cfg.segment_length):
            posteriors[start + i] = _draw_theta(rng, beta)
    cp_times = [p * cfg.segment_length for p in range(1, cfg.num_partitions)]
    return posteriors, GroundTruth(cp_times, betas)


def flatness_stats(posteriors, cp_times=()) -> np.ndarray:
    """Mean Shannon entropy (nats) of the posteriors within each partition."""
    p = np.asarray(posteriors, dtype=float)
    if p.ndim != 2 or p.shape[0] == 0:
        raise ContractViolation("expected a non-empty (T, K) posterior sequence")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    entropy = -terms.sum(axis=1)
    bounds = [0, *cp_times, p.shape[0]]
    return np.array(
        [entropy[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])]
    )


# -- file formats -----------------------------------------------------------


def write_posteriors_csv(path, posteriors) -> None:
    """One row per step: t, p_1, ..., p_K (classes 1-based in the header)."""
    p = np.asarray(posteriors, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"p_{k + 1}" for k in range(p.shape[1])])
        for t, row in enumerate(p):
            writer.writerow([t] + [repr(float(v)) for v in row])


def read_posteriors_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "t" or len(header) < 3:
            raise DataFormatError("expected header 't,p_1,...,p_K'", line=1)
        k = len(header) - 1
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != k + 1:
                raise DataFormatError(
                    f"expected {k + 1} fields, found {len(row)}", line=lineno
                )
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise DataFormatError(str(exc), line=lineno) from exc
    return np.asarray(rows, dtype=float).reshape(-1, k)


def write_ground_truth(path, truth: GroundTruth, cfg: SyntheticConfig) -> None:
    doc = {
        "cp_times": [int(t) for t in truth.cp_times],
        "beta": np.asarray(truth.beta).tolist(),
        "config": asdict(cfg),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)


def read_ground_truth(path) -> tuple[GroundTruth, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    truth = GroundTruth(
        [int(t) for t in doc["cp_times"]], np.asarray(doc["beta"], dtype=float)
    )
    return truth, doc.get("config", {})
