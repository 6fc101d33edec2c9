"""Command-line entry point: simulate, detect, bench, pipeline.

All randomness derives from ``--seed``; outputs are plain CSV/JSON files plus
optional SVG figures under ``--out``.  Log verbosity comes from the
``MCPD_LOG_LEVEL`` environment variable (DEBUG/INFO/WARNING/ERROR).

Exit codes: 0 success, 2 configuration error, 3 I/O or data-format error,
4 numerical error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import metrics, mixture, plots, runner, synthetic
from .errors import ContractViolation, DataFormatError, NumericalError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_samples_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ContractViolation(f"bad --samples list {text!r}: {exc}") from exc
    if not values or any(v < 1 for v in values):
        raise ContractViolation(f"--samples must be positive integers, got {text!r}")
    return values


def cmd_simulate(args) -> int:
    cfg = synthetic.SyntheticConfig(
        k=args.classes,
        segment_length=args.segment_length,
        num_partitions=args.partitions,
        eta=args.eta,
        samples=args.samples,
        seed=args.seed,
    )
    posteriors, truth = synthetic.generate(cfg)
    out = _out_dir(args)
    synthetic.write_posteriors_csv(out / "posteriors.csv", posteriors)
    synthetic.write_ground_truth(out / "ground_truth.json", truth, cfg)
    print(f"wrote {cfg.total_steps} steps ({len(truth.cp_times)} change points) to {out}")
    return EXIT_OK


def _load_truth(path) -> list[int]:
    truth, _ = synthetic.read_ground_truth(path)
    return truth.cp_times


def cmd_detect(args) -> int:
    posteriors = synthetic.read_posteriors_csv(args.input)
    if args.classes is not None and posteriors.shape[1] != args.classes:
        raise ContractViolation(
            f"--classes {args.classes} disagrees with {posteriors.shape[1]} columns in {args.input}"
        )
    rng = np.random.default_rng(args.seed)
    path = runner.run_detection(
        posteriors,
        mode=args.mode,
        samples=args.samples,
        rng=rng,
        lam=args.lambda_override,
        prune_cap=args.prune_cap,
    )
    events = metrics.detect(path, args.drop)
    out = _out_dir(args)
    metrics.write_runlength_csv(out / "runlength_path.csv", path)

    cp_times: list[int] = []
    if args.truth:
        cp_times = _load_truth(args.truth)
        report = metrics.evaluate(events, cp_times, horizon=posteriors.shape[0])
        metrics.write_report_json(out / "report.json", report)
        print(
            f"detection rate {report.detection_rate:.2f}, "
            f"{report.false_detections} false detections"
        )
    metrics.write_events_json(out / "events.json", events)
    if args.svg:
        fig = plots.runlength_figure(
            path, cp_times, events, title=f"{args.mode} S={args.samples}"
        )
        plots.save_figure(fig, out / "runlength.svg")
    print(f"{len(events)} detection events; outputs in {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.replicates < 1:
        raise ContractViolation(f"--replicates must be >= 1, got {args.replicates}")
    cells = runner.run_benchmark(
        args.seed,
        replicates=args.replicates,
        k=args.classes,
        drop=args.drop,
        lam=args.lambda_override,
        prune_cap=args.prune_cap,
    )
    out = _out_dir(args)
    runner.write_table_csv(out / "table1.csv", cells)
    with open(out / "bench_cells.json", "w") as fh:
        json.dump(
            [
                {
                    "eta": c.eta,
                    "mode": c.mode,
                    "samples": c.samples,
                    "replicates": c.replicates,
                    "detection_rate": c.detection_rate,
                    "delay_mean": c.delay_mean if np.isfinite(c.delay_mean) else "inf",
                    "delay_std": c.delay_std if np.isfinite(c.delay_std) else "inf",
                    "false_detections": c.false_detections,
                    "per_run_rates": c.per_run_rates,
                }
                for c in cells
            ],
            fh,
            indent=2,
        )
    print(runner.format_table(cells))
    print(f"outputs in {out}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    records = mixture.ingest_csv(args.input)
    if not records:
        raise DataFormatError(f"{args.input} contains no observations")
    rng = np.random.default_rng(args.seed)
    model = mixture.fit_em(records, args.classes, rng=rng)
    posteriors = mixture.posterior_sequence(model, records)

    out = _out_dir(args)
    mixture.save_model(out / "model.json", model)

    cp_times = _load_truth(args.truth) if args.truth else []
    samples_list = args.samples
    paths: dict[str, np.ndarray] = {}
    all_events: dict[str, list] = {}
    for samples in samples_list:
        srng = np.random.default_rng(np.random.SeedSequence([args.seed, samples]))
        path = runner.run_detection(
            posteriors,
            mode=args.mode,
            samples=samples,
            rng=srng,
            lam=args.lambda_override,
            prune_cap=args.prune_cap,
        )
        label = f"s{samples}" if args.mode == "mcpd" else "hier"
        paths[label] = path
        events = metrics.detect(path, args.drop)
        all_events[label] = events
        if cp_times:
            report = metrics.evaluate(events, cp_times, horizon=len(records))
            metrics.write_report_json(out / f"report_{label}.json", report)
        print(f"{label}: {len(events)} detection events")

    with open(out / "pipeline_paths.csv", "w", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh)
        writer.writerow(["t"] + [f"rl_{label}" for label in paths])
        for t in range(len(records)):
            writer.writerow([t] + [int(paths[label][t]) for label in paths])
    with open(out / "pipeline_events.json", "w") as fh:
        json.dump(
            {label: metrics.events_to_dicts(ev) for label, ev in all_events.items()},
            fh,
            indent=2,
        )
    if args.svg:
        fig = plots.overlay_figure(paths, cp_times, title=f"pipeline K={args.classes}")
        plots.save_figure(fig, out / "pipeline.svg")
    print(f"outputs in {out}")
    return EXIT_OK


def _add_common(parser, *, samples_list=False):
    parser.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
    parser.add_argument("--out", default=".", help="output directory (default .)")
    parser.add_argument("--drop", type=float, default=metrics.DEFAULT_DROP,
                        help="run-length drop threshold for detection (default 20; inf disables)")
    parser.add_argument("--lambda", dest="lambda_override", type=float, default=None,
                        help="override the change prior lambda (default 10^S, or 10^20 for hcpd)")
    parser.add_argument("--prune-cap", type=int, default=None,
                        help="cap on run-length hypotheses (default: none)")
    parser.add_argument("--mode", choices=("mcpd", "hcpd"), default="mcpd",
                        help="multinomial sampling (mcpd) or MAP-class baseline (hcpd)")
    if samples_list:
        parser.add_argument("--samples", type=_parse_samples_list, default=[10, 100],
                            help="comma-separated sample sizes per step (default 10,100)")
    else:
        parser.add_argument("--samples", type=int, default=100,
                            help="samples drawn per step in mcpd mode (default 100)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcpd",
        description="Online change-point detection over latent-class posteriors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic posterior sequence")
    p.add_argument("--classes", type=int, default=20, help="latent classes K (default 20)")
    p.add_argument("--eta", type=float, default=3.0, help="flatness upper bound (default 3.0)")
    p.add_argument("--segment-length", type=int, default=100)
    p.add_argument("--partitions", type=int, default=6)
    p.add_argument("--samples", type=int, default=None,
                   help="sample size to echo into the ground-truth sidecar")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="run detection on a posterior CSV")
    p.add_argument("input", help="posterior CSV (t,p_1..p_K)")
    p.add_argument("--truth", default=None, help="ground-truth JSON for evaluation")
    p.add_argument("--classes", type=int, default=None,
                   help="expected K (checked against the CSV)")
    p.add_argument("--svg", action="store_true", help="also render the run-length figure")
    _add_common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="run the flatness x sample-size benchmark grid")
    p.add_argument("--classes", type=int, default=20)
    p.add_argument("--replicates", type=int, default=5,
                   help="replicates per cell (default 5)")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("pipeline", help="mixture fit + detection on an observation CSV")
    p.add_argument("input", help="observation CSV (t, real:*, bin:* columns)")
    p.add_argument("--truth", default=None, help="ground-truth JSON with planted boundaries")
    p.add_argument("--classes", type=int, default=20, help="mixture components K (default 20)")
    p.add_argument("--svg", action="store_true", help="also render the overlay figure")
    _add_common(p, samples_list=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("MCPD_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ContractViolation as exc:
        print(f"mcpd: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFormatError as exc:
        print(f"mcpd: data error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"mcpd: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"mcpd: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
