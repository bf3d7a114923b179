"""Command-line entry point: single trials or whole directories of CSV files.

Exit codes: 0 when every trial succeeded, 1 when at least one trial failed,
2 on usage errors (bad flags, missing inputs, existing outputs without
``--force``). Each failed trial is logged and listed in
``batch_summary.csv`` with its error kind.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import OutputExists, TugError, UnsupportedFeature, UsageError
from .pipeline import analyze_file
from .report import bundle_paths, write_batch_summary, write_bundle

logger = logging.getLogger("tugkit")

BATCH_SUMMARY = "batch_summary.csv"
LOG_ENV = "TUGKIT_LOG"

EXIT_OK = 0
EXIT_TRIAL_FAILED = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunPlan:
    inputs: list[Path]
    config_path: Path
    output_dir: Path
    tolerance_override_m: float | None = None
    force: bool = False
    no_timestamp: bool = False
    jobs: int = 1


@dataclass(frozen=True)
class TrialOutcome:
    trial_id: str
    status: str  # "ok" | "failed"
    error_kind: str = ""
    total_time_s: float | None = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def available_cores() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # not available on every platform
        return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tugkit",
                description="Timed Up and Go analysis of 3D landmark trajectories.")
    p.add_argument("-i", "--input", required=True,
                   help="landmark CSV file, or a directory of *.csv files (not recursive)")
    p.add_argument("-c", "--config", required=True, help="TOML configuration file")
    p.add_argument("-o", "--output", default="results",
                   help="output directory (default: %(default)s)")
    p.add_argument("-y", "--tolerance", type=float, default=None,
                   help="turn-zone tolerance in metres, overrides the configuration")
    p.add_argument("--jobs", type=int, default=None,
                   help="number of worker processes (default: available cores)")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the generation timestamp from HTML reports")
    p.add_argument("--interactive", action="store_true",
                   help="interactive HTML report (reserved, not supported)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def discover_inputs(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted((p for p in path.iterdir() if p.suffix == ".csv" and p.is_file()),
                      key=lambda p: p.name)
    if path.is_file():
        return [path]
    raise UsageError(f"input not found: {path}")


def parse_args(argv: list[str] | None = None) -> RunPlan:
    """Validate the command line into a :class:`RunPlan` (raises UsageError)."""
    args = build_parser().parse_args(argv)
    if args.interactive:
        raise UnsupportedFeature("the interactive HTML report is not implemented; "
                                 "a static report is always written")
    if args.tolerance is not None and not args.tolerance > 0:
        raise UsageError(f"-y/--tolerance must be > 0, got {args.tolerance}")
    jobs = available_cores() if args.jobs is None else args.jobs
    if jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {jobs}")
    config_path = Path(args.config)
    if not config_path.is_file():
        raise UsageError(f"config file not found: {config_path}")
    inputs = discover_inputs(Path(args.input))
    if not inputs:
        raise UsageError(f"no *.csv files in {args.input}")
    output_dir = Path(args.output)
    if output_dir.exists() and not output_dir.is_dir():
        raise UsageError(f"output path is not a directory: {output_dir}")
    return RunPlan(inputs=inputs, config_path=config_path, output_dir=output_dir,
                   tolerance_override_m=args.tolerance, force=args.force,
                   no_timestamp=args.no_timestamp, jobs=jobs)


def trial_overlay(csv_path: Path) -> Path | None:
    """Per-trial ``<stem>.toml`` next to the CSV, if present."""
    candidate = csv_path.with_suffix(".toml")
    return candidate if candidate.is_file() else None


def check_outputs(plan: RunPlan) -> None:
    """Refuse duplicate trial ids and, without ``--force``, existing outputs."""
    seen: dict[str, Path] = {}
    for path in plan.inputs:
        if path.stem in seen:
            raise UsageError(f"{path} and {seen[path.stem]} map to the same output stem")
        seen[path.stem] = path
    if plan.force:
        return
    planned = [plan.output_dir / BATCH_SUMMARY]
    for trial_id in seen:
        planned.extend(bundle_paths(plan.output_dir, trial_id).paths())
    existing = [p for p in planned if p.exists()]
    if existing:
        raise OutputExists(f"{len(existing)} output file(s) already exist, e.g. {existing[0]}; "
                           "use --force to overwrite")


def error_kind(exc: BaseException) -> str:
    if isinstance(exc, TugError):
        return exc.kind
    if isinstance(exc, OSError):
        return "IoError"
    return "InternalError"


def process_trial(csv_path: Path, plan: RunPlan, timestamp: str | None) -> TrialOutcome:
    """Analyse one trial and write its bundle; never raises."""
    trial_id = csv_path.stem
    try:
        cfg = load_config(plan.config_path, trial_overlay(csv_path), plan.tolerance_override_m)
        result = analyze_file(csv_path, cfg)
        write_bundle(result, plan.output_dir, timestamp=timestamp)
    except Exception as exc:  # per-trial isolation
        kind = error_kind(exc)
        if kind == "InternalError":
            logger.exception("%s: unexpected failure", trial_id)
        else:
            logger.error("%s: %s: %s", trial_id, kind, exc)
        for stale in bundle_paths(plan.output_dir, trial_id).paths():
            stale.unlink(missing_ok=True)
        return TrialOutcome(trial_id, "failed", kind)
    logger.info("%s: ok (%.2f s)", trial_id, result.metrics.total_time_s)
    return TrialOutcome(trial_id, "ok", "", result.metrics.total_time_s)


def _worker_init(level: int) -> None:
    configure_logging(level)


def run(plan: RunPlan, timestamp: str | None = None) -> int:
    """Process every input of ``plan``; returns the exit code."""
    check_outputs(plan)
    plan.output_dir.mkdir(parents=True, exist_ok=True)
    if timestamp is None and not plan.no_timestamp:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if plan.no_timestamp:
        timestamp = None

    jobs = min(plan.jobs, len(plan.inputs))
    if jobs <= 1:
        outcomes = [process_trial(p, plan, timestamp) for p in plan.inputs]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_worker_init,
                                 initargs=(logger.getEffectiveLevel(),)) as pool:
            outcomes = list(pool.map(process_trial, plan.inputs,
                                     [plan] * len(plan.inputs),
                                     [timestamp] * len(plan.inputs)))

    write_batch_summary([(o.trial_id, o.status, o.error_kind, o.total_time_s) for o in outcomes],
                        plan.output_dir / BATCH_SUMMARY)
    failed = sum(o.status != "ok" for o in outcomes)
    logger.info("%d trial(s) processed, %d failed", len(outcomes), failed)
    return EXIT_TRIAL_FAILED if failed else EXIT_OK


def log_level_from_env(value: str | None) -> int:
    if not value:
        return logging.WARNING
    if value.strip().isdigit():
        return int(value)
    level = logging.getLevelName(value.strip().upper())
    return level if isinstance(level, int) else logging.WARNING


def configure_logging(level: int) -> None:
    root = logging.getLogger()
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(handler)
    root.setLevel(level)


def main(argv: list[str] | None = None) -> int:
    configure_logging(log_level_from_env(os.environ.get(LOG_ENV)))
    try:
        plan = parse_args(argv)
        return run(plan)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (UsageError, UnsupportedFeature, OutputExists) as exc:
        print(f"tugkit: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
