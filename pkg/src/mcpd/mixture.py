"""Mixture-model front end: raw heterogeneous observations to class posteriors.

Observations mix real-valued features (diagonal Gaussians per component) and
binary features (independent Bernoullis per component) under one latent class
indicator.  A batch EM fit produces the model; per-step responsibilities are
the categorical posteriors fed to the detector.

CSV contract: the header names each column's role — ``t`` for the optional
step index, ``real:<name>`` for real features, ``bin:<name>`` for binary
features.  Binary cells must be exactly 0 or 1.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ContractViolation, DataFormatError, NumericalError

logger = logging.getLogger(__name__)

VAR_FLOOR = 1e-6
BERN_CLAMP = 1e-6
EMPTY_MASS = 1e-8
_LOG_2PI = np.log(2.0 * np.pi)

__all__ = [
    "ObservationRecord",
    "MixtureModel",
    "fit_em",
    "posterior",
    "posterior_sequence",
    "ingest_csv",
    "write_csv",
    "save_model",
    "load_model",
    "planted_stream",
]


@dataclass
class ObservationRecord:
    t: int
    real_features: np.ndarray
    binary_features: np.ndarray


@dataclass
class MixtureModel:
    """Fitted heterogeneous mixture: weights plus per-component parameters."""

    weights: np.ndarray          # (K,)
    means: np.ndarray            # (K, Dr)
    variances: np.ndarray        # (K, Dr), diagonal
    bernoulli: np.ndarray        # (K, Db), in (0, 1)
    train_log_likelihoods: list[float] = field(default_factory=list, repr=False)

    @property
    def k(self) -> int:
        return self.weights.size


def _stack(records) -> tuple[np.ndarray, np.ndarray]:
    if not records:
        raise ContractViolation("observation stream is empty")
    dr = records[0].real_features.size
    db = records[0].binary_features.size
    x = np.empty((len(records), dr))
    b = np.empty((len(records), db))
    for i, rec in enumerate(records):
        if rec.real_features.size != dr or rec.binary_features.size != db:
            raise ContractViolation(f"record {i} changes feature dimensions")
        x[i] = rec.real_features
        b[i] = rec.binary_features
    return x, b


def _log_densities(model: MixtureModel, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(N, K) per-component log densities, excluding mixture weights."""
    out = np.zeros((x.shape[0], model.k))
    if x.shape[1]:
        diff = x[:, None, :] - model.means[None, :, :]
        out += -0.5 * (
            (_LOG_2PI + np.log(model.variances)).sum(axis=1)[None, :]
            + (diff**2 / model.variances[None, :, :]).sum(axis=2)
        )
    if b.shape[1]:
        out += b @ np.log(model.bernoulli).T + (1.0 - b) @ np.log1p(-model.bernoulli).T
    return out


def _kmeanspp_assign(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Cluster labels from k-means++ style seeding (no Lloyd iterations)."""
    n = x.shape[0]
    if x.shape[1] == 0:
        return rng.integers(0, k, n)
    centers = [x[rng.integers(n)]]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers.append(x[rng.integers(n)])
        else:
            centers.append(x[rng.choice(n, p=d2 / total)])
        d2 = np.minimum(d2, ((x - centers[-1]) ** 2).sum(axis=1))
    centers = np.asarray(centers)
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2).argmin(axis=1)


def _component_from_datum(model, x, b, i, rng):
    j = rng.integers(x.shape[0])
    model.means[i] = x[j]
    model.variances[i] = np.maximum(x.var(axis=0), VAR_FLOOR) if x.shape[1] else model.variances[i]
    if b.shape[1]:
        model.bernoulli[i] = np.clip(b[j], 0.01, 0.99)


def fit_em(
    records,
    k: int,
    max_iters: int = 100,
    tol: float = 1e-6,
    rng: np.random.Generator | None = None,
) -> MixtureModel:
    """Batch EM fit of the heterogeneous mixture.

    Stops at ``max_iters`` or when the log-likelihood improvement falls below
    ``tol`` relative to its magnitude.  Components whose responsibility mass
    collapses are reseeded from a random datum (logged).  The log-likelihood
    trace is kept on the returned model.
    """
    if k < 2:
        raise ContractViolation(f"mixture needs K >= 2 components, got {k}")
    x, b = _stack(records)
    n = x.shape[0]
    if n < k:
        raise ContractViolation(f"stream of length {n} cannot support K={k} components")
    rng = rng if rng is not None else np.random.default_rng(0)

    labels = _kmeanspp_assign(x, k, rng)
    model = MixtureModel(
        weights=np.full(k, 1.0 / k),
        means=np.zeros((k, x.shape[1])),
        variances=np.ones((k, x.shape[1])),
        bernoulli=np.full((k, b.shape[1]), 0.5),
    )
    for i in range(k):
        mask = labels == i
        if not mask.any():
            _component_from_datum(model, x, b, i, rng)
            continue
        if x.shape[1]:
            model.means[i] = x[mask].mean(axis=0)
            model.variances[i] = np.maximum(x[mask].var(axis=0), VAR_FLOOR)
        if b.shape[1]:
            model.bernoulli[i] = np.clip(b[mask].mean(axis=0), 0.01, 0.99)
    model.weights = np.maximum(np.bincount(labels, minlength=k) / n, 1.0 / (2 * n))
    model.weights /= model.weights.sum()

    prev_ll = None
    for _ in range(max_iters):
        log_joint = _log_densities(model, x, b) + np.log(model.weights)[None, :]
        norms = logsumexp(log_joint, axis=1)
        ll = float(norms.sum())
        model.train_log_likelihoods.append(ll)
        resp = np.exp(log_joint - norms[:, None])

        mass = resp.sum(axis=0)
        empty = mass < EMPTY_MASS
        if empty.any():
            for i in np.flatnonzero(empty):
                logger.warning("reseeding empty mixture component %d", i)
                _component_from_datum(model, x, b, i, rng)
                mass[i] = 1.0
                resp[:, i] = 1.0 / n
            mass = resp.sum(axis=0)

        model.weights = mass / mass.sum()
        if x.shape[1]:
            model.means = (resp.T @ x) / mass[:, None]
            sq = (resp.T @ (x**2)) / mass[:, None]
            model.variances = np.maximum(sq - model.means**2, VAR_FLOOR)
        if b.shape[1]:
            model.bernoulli = np.clip(
                (resp.T @ b) / mass[:, None], BERN_CLAMP, 1.0 - BERN_CLAMP
            )

        if prev_ll is not None and ll - prev_ll < tol * abs(prev_ll):
            break
        prev_ll = ll
    return model


def posterior(model: MixtureModel, record: ObservationRecord) -> np.ndarray:
    """Responsibilities p(z | x) for one observation, via log densities."""
    return posterior_sequence(model, [record])[0]


def posterior_sequence(model: MixtureModel, records) -> np.ndarray:
    """(N, K) responsibilities for a stream of observations."""
    x, b = _stack(records)
    if x.shape[1] != model.means.shape[1] or b.shape[1] != model.bernoulli.shape[1]:
        raise ContractViolation("record feature dimensions do not match the model")
    log_joint = _log_densities(model, x, b) + np.log(model.weights)[None, :]
    norms = logsumexp(log_joint, axis=1)
    if not np.all(np.isfinite(norms)):
        bad = int(np.flatnonzero(~np.isfinite(norms))[0])
        raise NumericalError(f"every mixture component underflowed for record {bad}")
    return np.exp(log_joint - norms[:, None])


# -- files --------------------------------------------------------------------


def ingest_csv(path) -> list[ObservationRecord]:
    """Parse an observation stream; empty files yield an empty stream."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        t_col = None
        real_cols, bin_cols = [], []
        for i, name in enumerate(header):
            name = name.strip()
            if name == "t":
                t_col = i
            elif name.startswith("real:"):
                real_cols.append(i)
            elif name.startswith("bin:"):
                bin_cols.append(i)
            else:
                raise DataFormatError(
                    f"column {i + 1} ({name!r}) must be 't', 'real:<name>' or 'bin:<name>'",
                    line=1,
                )
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"expected {len(header)} fields, found {len(row)}", line=lineno
                )
            try:
                reals = np.array([float(row[i]) for i in real_cols])
            except ValueError as exc:
                raise DataFormatError(f"bad real value ({exc})", line=lineno) from exc
            bits = np.empty(len(bin_cols))
            for j, i in enumerate(bin_cols):
                v = row[i].strip()
                if v not in ("0", "1"):
                    raise DataFormatError(
                        f"binary column {header[i]!r} has value {v!r}, expected 0 or 1",
                        line=lineno,
                    )
                bits[j] = float(v)
            t = len(records)
            if t_col is not None:
                try:
                    t = int(row[t_col])
                except ValueError as exc:
                    raise DataFormatError(f"bad step index ({exc})", line=lineno) from exc
            records.append(ObservationRecord(t, reals, bits))
    return records


def write_csv(path, records) -> None:
    """Inverse of ``ingest_csv``; round-trips values exactly."""
    if not records:
        with open(path, "w", newline="") as fh:
            fh.write("")
        return
    dr = records[0].real_features.size
    db = records[0].binary_features.size
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t"]
            + [f"real:f{i + 1}" for i in range(dr)]
            + [f"bin:b{i + 1}" for i in range(db)]
        )
        for rec in records:
            writer.writerow(
                [rec.t]
                + [repr(float(v)) for v in rec.real_features]
                + [str(int(v)) for v in rec.binary_features]
            )


def save_model(path, model: MixtureModel) -> None:
    doc = {
        "weights": model.weights.tolist(),
        "means": model.means.tolist(),
        "variances": model.variances.tolist(),
        "bernoulli": model.bernoulli.tolist(),
        "train_log_likelihoods": model.train_log_likelihoods,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)


def load_model(path) -> MixtureModel:
    with open(path) as fh:
        doc = json.load(fh)
    return MixtureModel(
        weights=np.asarray(doc["weights"], dtype=float),
        means=np.asarray(doc["means"], dtype=float).reshape(len(doc["weights"]), -1),
        variances=np.asarray(doc["variances"], dtype=float).reshape(len(doc["weights"]), -1),
        bernoulli=np.asarray(doc["bernoulli"], dtype=float).reshape(len(doc["weights"]), -1),
        train_log_likelihoods=[float(v) for v in doc.get("train_log_likelihoods", [])],
    )


def planted_stream(
    length: int = 300,
    boundaries: tuple[int, ...] = (75, 150, 225),
    real_dim: int = 3,
    binary_dim: int = 3,
    separation: float = 3.0,
    noise: float = 1.0,
    rng: np.random.Generator | None = None,
) -> tuple[list[ObservationRecord], list[int]]:
    """Heterogeneous stream with planted regime switches at ``boundaries``.

    Regime means sit at distinct hypercube corners (+/- ``separation`` per
    real feature) with matching Bernoulli rate patterns, so regimes are
    separated by construction; only the observation noise is random.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    bounds = sorted(int(b) for b in boundaries)
    if any(b <= 0 or b >= length for b in bounds):
        raise ContractViolation("boundaries must lie strictly inside the stream")
    n_regimes = len(bounds) + 1
    signs = np.array(
        [[1.0 if (r >> d) & 1 else -1.0 for d in range(real_dim)] for r in range(n_regimes)]
    )
    means = separation * signs
    rates = np.array(
        [
            [0.8 if (r >> (d % 2)) & 1 else 0.2 for d in range(binary_dim)]
            for r in range(n_regimes)
        ]
    )
    records = []
    for t in range(length):
        regime = int(np.searchsorted(bounds, t, side="right"))
        x = rng.normal(means[regime], noise) if real_dim else np.empty(0)
        bvals = (rng.random(binary_dim) < rates[regime]).astype(float) if binary_dim else np.empty(0)
        records.append(ObservationRecord(t, x, bvals))
    return records, bounds
