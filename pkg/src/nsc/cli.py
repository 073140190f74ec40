"""``nsc`` command line.

    nsc <experiment> --config <file> [--output-dir <dir>] [--jobs N] [--seed S]

Exit codes: 0 completed, 2 validation error, 3 numerical failure.  The
``NSC_JOBS`` environment variable supplies the default for ``--jobs``.
``nsc batch --config <file>`` runs every entry of an ``experiments:`` list
in numbered subdirectories.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import EXPERIMENTS, ConfigError, load_config, validate_config
from .dispersive_lab import PreconditionError
from .experiments import RUNNERS
from .mild_solver import NumericalFailure
from .runio import RunDir

__all__ = ["main", "run", "EXIT_OK", "EXIT_VALIDATION", "EXIT_NUMERICAL"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("nsc")


def _default_jobs() -> int | None:
    v = os.environ.get("NSC_JOBS")
    if v is None or v == "":
        return None
    try:
        return int(v)
    except ValueError:
        return -1  # reported as a validation error


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsc", description="Rotating Navier-Stokes numerical experiments.")
    ap.add_argument("experiment", choices=list(EXPERIMENTS) + ["batch"])
    ap.add_argument("--config", required=True, help="YAML configuration file")
    ap.add_argument("--output-dir", default=None, help="run directory (overrides output_dir in the config)")
    ap.add_argument("--jobs", type=int, default=None, help="worker processes for sweeps (default: NSC_JOBS or 1)")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(experiment: str, raw: dict, output_dir: str | None, jobs: int, seed: int | None) -> int:
    """Validate, dispatch and persist one experiment; returns the exit code."""
    try:
        cfg = validate_config(raw, experiment, seed)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    out = output_dir or cfg.output_dir or os.path.join("runs", experiment)
    rd = RunDir(out, experiment, raw, cfg.seed, __version__)
    rd.write_config()
    try:
        verdicts, status = RUNNERS[experiment](cfg, rd, jobs)
    except (ConfigError, PreconditionError) as exc:
        errs = exc.errors if isinstance(exc, ConfigError) else str(exc).split("; ")
        for e in errs:
            print(f"config error: {e}", file=sys.stderr)
        rd.finish({}, "validation-error")
        return EXIT_VALIDATION
    except (NumericalFailure, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        rd.finish({}, "numerical-failure")
        return EXIT_NUMERICAL
    rec = rd.finish(verdicts, status)
    summary = " ".join(f"{k}={v}" for k, v in verdicts.items())
    print(f"{experiment}: {status} {summary} -> {out} ({rec.wall_clock_s:.1f}s)")
    return EXIT_NUMERICAL if status == "numerical-failure" else EXIT_OK


def run_batch(raw: dict, output_dir: str | None, jobs: int, seed: int | None) -> int:
    entries = raw.get("experiments")
    if not isinstance(entries, list):
        print("config error: experiments: batch files need a list under 'experiments'", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(output_dir or raw.get("output_dir") or os.path.join("runs", "batch"))
    out.mkdir(parents=True, exist_ok=True)
    bad = [i for i, e in enumerate(entries) if not isinstance(e, dict) or e.get("experiment") not in EXPERIMENTS]
    if bad:
        for i in bad:
            print(f"config error: experiments[{i}]: needs a mapping with a known 'experiment'", file=sys.stderr)
        return EXIT_VALIDATION
    rd = RunDir(out, "batch", raw, int(seed if seed is not None else raw.get("seed", 0) or 0), __version__)
    codes = []
    for i, e in enumerate(entries):
        sub = out / f"{i:02d}-{e['experiment']}"
        codes.append(run(e["experiment"], e, str(sub), jobs, seed))
        rd.record.outputs.append(str(sub.relative_to(out)))
    rd.finish({f"{i:02d}": c for i, c in enumerate(codes)})
    return max(codes, default=EXIT_OK)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    if jobs is None:
        jobs = 1
    if jobs < 1:
        print("config error: --jobs / NSC_JOBS must be a positive integer", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        raw = load_config(args.config)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.experiment == "batch":
        return run_batch(raw, args.output_dir, jobs, args.seed)
    return run(args.experiment, raw, args.output_dir, jobs, args.seed)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
