"""Detection driver and the seeded benchmark grid.

``run_detection`` wires posterior sequence -> pseudo-observations -> run-length
engine and returns the MAP run-length path.  ``run_benchmark`` sweeps the
flatness / sample-size grid with per-cell replicates, deriving every stream
and sampler seed from one root seed so each cell is independently
reproducible and all sample sizes for a given (flatness, replicate) pair see
the same data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import HazardSpec, RunLengthEngine
from .errors import ContractViolation
from .metrics import DEFAULT_DROP, DEFAULT_SLACK, EvalReport, detect, evaluate
from .sampler import as_posterior, map_class, one_hot_counts, sample_counts
from .synthetic import SyntheticConfig, generate

# Fixed benchmark grid: flatness levels x methods, matching the synthetic study
BENCH_ETAS = (2.0, 3.0, 4.0, 10.0)
BENCH_METHODS = (("mcpd", 10), ("mcpd", 50), ("mcpd", 100), ("hcpd", 1))

# hypotheses grow linearly with stream length; cap them only on long streams
PRUNE_AUTO_THRESHOLD = 10_000
PRUNE_AUTO_CAP = 512

__all__ = [
    "BENCH_ETAS",
    "BENCH_METHODS",
    "CellResult",
    "default_hazard",
    "method_label",
    "run_detection",
    "run_cell",
    "run_benchmark",
    "write_table_csv",
    "format_table",
]


def default_hazard(mode: str, samples: int) -> HazardSpec:
    """Per-method change prior: lambda = 10^S for sampling mode, 10^20 for MAP mode."""
    if mode == "mcpd":
        return HazardSpec(float(samples))
    if mode == "hcpd":
        return HazardSpec(20.0)
    raise ContractViolation(f"unknown mode {mode!r} (expected 'mcpd' or 'hcpd')")


def run_detection(
    posteriors,
    mode: str = "mcpd",
    samples: int = 100,
    rng: np.random.Generator | None = None,
    lam: float | None = None,
    alpha0=None,
    prune_cap: int | None = None,
) -> np.ndarray:
    """MAP run-length path for a posterior sequence.

    ``path[i]`` is the MAP run length after consuming observation i.  In
    ``hcpd`` mode each observation contributes its MAP class as a single
    draw; in ``mcpd`` mode, ``samples`` multinomial draws (``rng`` required).
    """
    p = np.asarray(posteriors, dtype=float)
    if p.ndim != 2 or p.shape[0] == 0:
        raise ContractViolation("expected a non-empty (T, K) posterior sequence")
    if mode not in ("mcpd", "hcpd"):
        raise ContractViolation(f"unknown mode {mode!r}")
    if mode == "mcpd" and rng is None:
        raise ContractViolation("mcpd mode draws samples and needs an rng")
    if samples < 1:
        raise ContractViolation(f"samples must be >= 1, got {samples}")

    hazard = default_hazard(mode, samples) if lam is None else HazardSpec.from_lambda(lam)
    engine = RunLengthEngine(p.shape[1], hazard, alpha0)
    path = np.empty(p.shape[0], dtype=np.int64)
    for i, row in enumerate(p):
        probs = as_posterior(row)
        if mode == "hcpd":
            counts = one_hot_counts(map_class(probs), probs.size)
        else:
            counts = sample_counts(probs, samples, rng)
        engine.step(counts)
        if prune_cap is not None:
            engine.prune(cap=prune_cap)
        path[i] = engine.map_runlength()
    return path


@dataclass
class CellResult:
    """One benchmark cell: a (flatness, method) pair aggregated over replicates."""

    eta: float
    mode: str
    samples: int
    replicates: int
    detection_rate: float
    delay_mean: float
    delay_std: float
    delays: list[int] = field(repr=False)
    false_detections: int = 0
    per_run_rates: list[float] = field(default_factory=list, repr=False)
    reports: list[EvalReport] = field(default_factory=list, repr=False)


def method_label(mode: str, samples: int) -> str:
    return f"s{samples}" if mode == "mcpd" else "hier"


def _child_seed(*keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(list(keys))


def run_cell(
    root_seed: int,
    eta: float,
    mode: str,
    samples: int,
    replicates: int,
    k: int = 20,
    segment_length: int = 100,
    num_partitions: int = 6,
    drop: float = DEFAULT_DROP,
    slack: int = DEFAULT_SLACK,
    lam: float | None = None,
    prune_cap: int | None = None,
) -> CellResult:
    """Run one grid cell: fresh data per replicate, paired across methods.

    The stream seed depends only on (root, eta, replicate), so every method
    sees identical data within a replicate; the sampler seed additionally
    depends on the method.
    """
    if replicates < 1:
        raise ContractViolation(f"replicates must be >= 1, got {replicates}")
    eta_key = int(round(eta * 1000))
    total = segment_length * num_partitions
    if prune_cap is None and total > PRUNE_AUTO_THRESHOLD:
        prune_cap = PRUNE_AUTO_CAP

    rates, delays, reports = [], [], []
    false_total = 0
    for rep in range(replicates):
        data_seed = int(_child_seed(root_seed, eta_key, rep).generate_state(1)[0])
        cfg = SyntheticConfig(
            k=k,
            segment_length=segment_length,
            num_partitions=num_partitions,
            eta=eta,
            samples=samples,
            seed=data_seed,
        )
        posteriors, truth = generate(cfg)
        rng = np.random.default_rng(_child_seed(root_seed, eta_key, rep, samples, 1 if mode == "hcpd" else 0))
        path = run_detection(
            posteriors, mode=mode, samples=samples, rng=rng, lam=lam, prune_cap=prune_cap
        )
        events = detect(path, drop)
        report = evaluate(events, truth.cp_times, horizon=total, slack=slack)
        rates.append(report.detection_rate)
        delays.extend(report.delays)
        false_total += report.false_detections
        reports.append(report)

    if delays:
        delay_mean = float(np.mean(delays))
        delay_std = float(np.std(delays, ddof=1)) if len(delays) > 1 else 0.0
    else:
        delay_mean = math.inf
        delay_std = math.inf
    return CellResult(
        eta=eta,
        mode=mode,
        samples=samples,
        replicates=replicates,
        detection_rate=float(np.mean(rates)),
        delay_mean=delay_mean,
        delay_std=delay_std,
        delays=delays,
        false_detections=false_total,
        per_run_rates=rates,
        reports=reports,
    )


def run_benchmark(
    root_seed: int,
    replicates: int = 5,
    etas=BENCH_ETAS,
    methods=BENCH_METHODS,
    **cell_kwargs,
) -> list[CellResult]:
    """All grid cells in fixed order (outer: eta, inner: method)."""
    cells = []
    for eta in etas:
        for mode, samples in methods:
            cells.append(
                run_cell(root_seed, eta, mode, samples, replicates, **cell_kwargs)
            )
    return cells


def _rate_cell(v: float) -> str:
    return "-" if v == 0.0 else repr(round(v, 6))


def _delay_cell(v: float) -> str:
    return "inf" if not math.isfinite(v) else repr(round(v, 6))


def write_table_csv(path, cells: list[CellResult]) -> None:
    """Benchmark table: one row per flatness level, rate and delay per method.

    Zero-rate cells are written as "-", undefined delays as "inf"; delays are
    in raw steps (display scaling is left to formatters).
    """
    etas = sorted({c.eta for c in cells})
    labels = []
    for c in cells:
        lbl = method_label(c.mode, c.samples)
        if lbl not in labels:
            labels.append(lbl)
    index = {(c.eta, method_label(c.mode, c.samples)): c for c in cells}
    header = (
        ["eta"]
        + [f"rate_{m}" for m in labels]
        + [x for m in labels for x in (f"delay_mean_{m}", f"delay_std_{m}")]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for eta in etas:
            row = [repr(eta)]
            row += [_rate_cell(index[(eta, m)].detection_rate) for m in labels]
            for m in labels:
                cell = index[(eta, m)]
                row += [_delay_cell(cell.delay_mean), _delay_cell(cell.delay_std)]
            writer.writerow(row)


def format_table(cells: list[CellResult]) -> str:
    """Human-readable summary; delays shown divided by 10, as in the study tables."""
    etas = sorted({c.eta for c in cells})
    labels = []
    for c in cells:
        lbl = method_label(c.mode, c.samples)
        if lbl not in labels:
            labels.append(lbl)
    index = {(c.eta, method_label(c.mode, c.samples)): c for c in cells}
    lines = ["delays shown x10 steps", "eta    " + "".join(f"{m:>22}" for m in labels)]
    for eta in etas:
        parts = [f"{eta:<7g}"]
        for m in labels:
            c = index[(eta, m)]
            rate = "-" if c.detection_rate == 0 else f"{c.detection_rate:.2f}"
            if math.isfinite(c.delay_mean):
                delay = f"{c.delay_mean / 10:.2f} +/- {c.delay_std / 10:.2f}"
            else:
                delay = "inf"
            parts.append(f"{rate:>6} {delay:>15}")
        lines.append("".join(parts))
    return "\n".join(lines)
