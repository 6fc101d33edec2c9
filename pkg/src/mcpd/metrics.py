"""Detection rule and evaluation against ground-truth change points.

A detection fires at step t' when the MAP run length falls by more than
``drop`` in one step; the inferred change location is t' - r*_{t'}.  Events
are matched greedily to true change points inside a window around each one,
yielding the detection rate and delay statistics.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

DEFAULT_DROP = 20
DEFAULT_SLACK = 10

__all__ = [
    "DEFAULT_DROP",
    "DEFAULT_SLACK",
    "DetectionEvent",
    "EvalReport",
    "detect",
    "evaluate",
    "events_to_dicts",
    "write_events_json",
    "report_to_dict",
    "write_report_json",
]


@dataclass
class DetectionEvent:
    """A run-length drop: where it fired, and the change location it implies."""

    detected_at: int
    runlength_at_detection: int
    inferred_cp: int
    matched_true_cp: int | None = None
    delay: int | None = None


@dataclass
class EvalReport:
    detection_rate: float
    delays: list[int]
    delay_mean: float
    delay_std: float
    false_detections: int
    n_true_cps: int
    n_events: int = 0


def detect(runlength_path, drop: float = DEFAULT_DROP) -> list[DetectionEvent]:
    """Events at every step whose MAP run length fell by strictly more than ``drop``.

    ``runlength_path[i]`` is the MAP run length after observation i; the rule
    is causal, comparing only consecutive entries.
    """
    path = np.asarray(runlength_path)
    if path.ndim != 1 or path.size == 0:
        raise ContractViolation("run-length path must be a non-empty 1-D sequence")
    if not drop >= 1:
        raise ContractViolation(f"drop threshold must be >= 1, got {drop}")
    events = []
    for i in range(1, path.size):
        if path[i] < path[i - 1] - drop:
            r = int(path[i])
            events.append(DetectionEvent(i, r, i - r))
    return events


def evaluate(
    events: list[DetectionEvent],
    cp_times,
    horizon: int,
    slack: int = DEFAULT_SLACK,
    delay_from_inferred: bool = False,
) -> EvalReport:
    """Match events to true change points and summarise.

    Each true change point at step c is matched to the earliest unmatched
    event whose inferred change location lies in [c - slack, next boundary)
    and which fired at or after c (a change cannot be detected before it
    happens).  The next boundary is the following true change point, or
    ``horizon`` for the last one.  Matched events contribute
    delay = detected_at - c (or detected_at - inferred_cp with
    ``delay_from_inferred``); unmatched events count as false detections.

    With no matches the delay mean/std are reported as infinity.  Matching
    results are also written back onto the events.
    """
    cps = sorted(int(c) for c in cp_times)
    events = sorted(events, key=lambda e: e.detected_at)
    for e in events:
        e.matched_true_cp = None
        e.delay = None

    delays: list[int] = []
    matched = 0
    for j, c in enumerate(cps):
        window_end = cps[j + 1] if j + 1 < len(cps) else int(horizon)
        for e in events:
            if e.matched_true_cp is not None:
                continue
            if c - slack <= e.inferred_cp < window_end and e.detected_at >= c:
                e.matched_true_cp = c
                e.delay = e.detected_at - (e.inferred_cp if delay_from_inferred else c)
                delays.append(e.delay)
                matched += 1
                break

    if delays:
        delay_mean = float(np.mean(delays))
        delay_std = float(np.std(delays, ddof=1)) if len(delays) > 1 else 0.0
    else:
        delay_mean = math.inf
        delay_std = math.inf
    rate = matched / len(cps) if cps else 1.0
    return EvalReport(
        detection_rate=rate,
        delays=delays,
        delay_mean=delay_mean,
        delay_std=delay_std,
        false_detections=len(events) - matched,
        n_true_cps=len(cps),
        n_events=len(events),
    )


# -- serialisation ------------------------------------------------------------


def _json_real(v: float):
    # Table-style "infinity" cells become the literal string "inf"
    if v is None or math.isfinite(v):
        return v
    return "inf"


def events_to_dicts(events) -> list[dict]:
    return [
        {
            "detected_at": e.detected_at,
            "runlength_at_detection": e.runlength_at_detection,
            "inferred_cp": e.inferred_cp,
            "matched_true_cp": e.matched_true_cp,
            "delay": e.delay,
        }
        for e in events
    ]


def write_events_json(path, events) -> None:
    with open(path, "w") as fh:
        json.dump(events_to_dicts(events), fh, indent=2)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "detection_rate": report.detection_rate,
        "delays": report.delays,
        "delay_mean": _json_real(report.delay_mean),
        "delay_std": _json_real(report.delay_std),
        "false_detections": report.false_detections,
        "n_true_cps": report.n_true_cps,
        "n_events": report.n_events,
    }


def write_report_json(path, report: EvalReport) -> None:
    with open(path, "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2)


def write_runlength_csv(path, map_path) -> None:
    """MAP run length per step: columns t, map_runlength."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "map_runlength"])
        for t, r in enumerate(np.asarray(map_path)):
            writer.writerow([t, int(r)])
