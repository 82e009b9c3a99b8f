"""Command-line front end.

Subcommands: retry-prob, simulate, timeline, sweep, msf. Each run writes its
result files plus one manifest.json capturing the fully-resolved parameters,
so any output directory can be re-produced from its manifest alone.

Exit codes: 0 success, 2 usage/config error, 3 numerical error, 4 base system
unstable without a trigger. Set MSFQ_LOG to control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .engine import Estimator, SimulationSpec, simulate
from .errors import BaseUnstableError, NumericalError, ParameterError
from .metastable import MsfMode, msf_report
from .model import ModelConfig, retry_probability
from .runconfig import (
    MsfRun,
    SimulateRun,
    SweepRun,
    TimelineRun,
    parse_msf,
    parse_simulate,
    parse_sweep,
    parse_timeline,
)
from .scenario import Timeline, run_sweep, run_timeline
from .stability import classify

logger = logging.getLogger(__name__)


def _fmt(value: float) -> str:
    """Floats at 12 significant digits; CSV dialect requirement."""
    return f"{value:.12g}"


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(value):
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, Estimator):
        return value.value
    if isinstance(value, MsfMode):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class _Run:
    """Output directory plus the manifest accumulated while a command runs."""

    def __init__(self, subcommand: str, out_dir: str, prefix: str, config_path, resolved):
        self.directory = Path(out_dir)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.prefix = prefix
        self.subcommand = subcommand
        self.config_path = config_path
        self.resolved = resolved
        self.outputs: list[str] = []
        self.started = time.monotonic()

    def path(self, name: str) -> Path:
        full = f"{self.prefix}{name}"
        self.outputs.append(full)
        return self.directory / full

    def finish(self) -> None:
        manifest = {
            "subcommand": self.subcommand,
            "config_path": str(self.config_path) if self.config_path else None,
            "resolved": _jsonable(self.resolved),
            "outputs": self.outputs,
            "version": __version__,
            "wall_clock_seconds": time.monotonic() - self.started,
        }
        _write_json(self.directory / f"{self.prefix}manifest.json", manifest)


def _apply_overrides(run, args) -> None:
    if getattr(args, "seed", None) is not None:
        run.seed = args.seed
    if getattr(args, "workers", None) is not None and hasattr(run, "workers"):
        run.workers = args.workers
    if getattr(args, "estimator", None) is not None and hasattr(run, "estimator"):
        run.estimator = Estimator(args.estimator)
    if getattr(args, "mode", None) is not None and hasattr(run, "mode"):
        run.mode = MsfMode(args.mode)
    if getattr(args, "out", None) is not None:
        run.output.directory = args.out


def _out_dir(run) -> str:
    return run.output.directory or "msfq-out"


def cmd_retry_prob(args) -> int:
    config = ModelConfig(
        arrival_rate=1.0,  # irrelevant to the retry curve; must only be valid
        service_rate=args.service_rate,
        timeout=args.timeout,
    )
    if args.max_queue_len < 0:
        raise ParameterError("--max-queue-len must be nonnegative")
    resolved = {
        "service_rate": args.service_rate,
        "timeout": args.timeout,
        "max_queue_len": args.max_queue_len,
    }
    run = _Run("retry-prob", args.out, args.prefix, None, resolved)
    rows = [
        [str(q), _fmt(retry_probability(config, q))]
        for q in range(args.max_queue_len + 1)
    ]
    _write_csv(run.path("retry_prob.csv"), ["queue_len", "p_retry"], rows)
    run.finish()
    return 0


def cmd_simulate(args) -> int:
    run_cfg: SimulateRun = parse_simulate(args.config)
    _apply_overrides(run_cfg, args)
    run = _Run("simulate", _out_dir(run_cfg), run_cfg.output.prefix, args.config, run_cfg)
    spec = SimulationSpec(
        config=run_cfg.model,
        duration=run_cfg.duration,
        seed=run_cfg.seed,
        estimator=run_cfg.estimator,
        state_cap=run_cfg.state_cap,
        burn_in_fraction=run_cfg.burn_in,
        trajectory_stride=run_cfg.trajectory_stride,
    )
    result = simulate(spec)
    rows = [
        [str(state.orbit), str(state.queue), _fmt(p)]
        for state, p in sorted(result.occupancy.items())
    ]
    _write_csv(run.path("occupancy.csv"), ["orbit", "queue", "probability"], rows)
    verdict, trajectory = classify(spec, run_cfg.windows, run_cfg.growth_factor)
    _write_json(run.path("verdict.json"), {
        "classification": {
            "stationary": verdict.stationary,
            "reason": verdict.reason.value,
            "final_metric": verdict.final_metric,
            "windows": [[t, m] for t, m in trajectory.windows],
        },
        "run": {
            "diverged": result.diverged,
            "final_state": list(result.final_state),
            "transitions_executed": result.transitions_executed,
        },
    })
    run.finish()
    return 0


def cmd_timeline(args) -> int:
    run_cfg: TimelineRun = parse_timeline(args.config)
    _apply_overrides(run_cfg, args)
    run = _Run("timeline", _out_dir(run_cfg), run_cfg.output.prefix, args.config, run_cfg)
    timeline = Timeline(
        phases=tuple(run_cfg.phases),
        seed=run_cfg.seed,
        window_length=run_cfg.window_length,
        state_cap=run_cfg.state_cap,
        estimator=run_cfg.estimator,
    )
    result = run_timeline(timeline)
    rows = [
        [_fmt(s.time), str(s.state.orbit), str(s.state.queue), _fmt(s.metric),
         str(s.phase_index)]
        for s in result.samples
    ]
    _write_csv(run.path("timeline.csv"), ["time", "orbit", "queue", "metric", "phase"], rows)
    _write_json(run.path("timeline.json"), {
        "diverged": result.diverged,
        "final_state": list(result.final_state),
        "final_time": result.final_time,
    })
    run.finish()
    return 0


def cmd_sweep(args) -> int:
    run_cfg: SweepRun = parse_sweep(args.config)
    _apply_overrides(run_cfg, args)
    run = _Run("sweep", _out_dir(run_cfg), run_cfg.output.prefix, args.config, run_cfg)
    seeds = [run_cfg.seed + r for r in range(run_cfg.replications)]
    points = run_sweep(
        run_cfg.grid,
        run_cfg.per_point_duration,
        seeds,
        state_cap=run_cfg.state_cap,
        window_count=run_cfg.windows,
        growth_factor=run_cfg.growth_factor,
        burn_in_fraction=run_cfg.burn_in,
        workers=run_cfg.workers,
    )
    rows = [
        [_fmt(p.config.arrival_rate), _fmt(p.config.service_rate),
         "stationary" if p.stationary else "non-stationary", _fmt(p.final_metric)]
        for p in points
    ]
    _write_csv(run.path("sweep.csv"), ["lambda", "mu", "verdict", "metric"], rows)
    run.finish()
    return 0


def cmd_msf(args) -> int:
    run_cfg: MsfRun = parse_msf(args.config)
    _apply_overrides(run_cfg, args)
    run = _Run("msf", _out_dir(run_cfg), run_cfg.output.prefix, args.config, run_cfg)
    report = msf_report(
        run_cfg.scenario,
        run_cfg.per_state_duration,
        run_cfg.trigger_replications,
        mode=run_cfg.mode,
        seed=run_cfg.seed,
        replications=run_cfg.replications,
        state_cap=run_cfg.state_cap,
        window_count=run_cfg.windows,
        growth_factor=run_cfg.growth_factor,
        burn_in_fraction=run_cfg.burn_in,
        workers=run_cfg.workers,
    )
    sset = report.stationary_set
    _write_json(run.path("msf.json"), {
        "p_ms": report.probability,
        "stationary_set_size": len(sset.states),
        "frontier": list(sset.frontier),
        "mode": report.mode.value,
        "replications": report.trigger_replications,
        "non_stationary_replications": report.non_stationary_replications,
        "diverged_replications": report.diverged_replications,
        "split_vote_states": [list(s) for s in sset.split_votes],
    })
    run.finish()
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msfq",
        description="Retrial-queue CTMC simulator for retry-storm metastability analysis",
    )
    parser.add_argument("--version", action="version", version=f"msfq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    retry = sub.add_parser("retry-prob", help="emit the retry-probability curve")
    retry.add_argument("--service-rate", type=float, required=True,
                       help="service rate of the primary queue (requests/s)")
    retry.add_argument("--timeout", type=float, required=True,
                       help="client timeout (seconds)")
    retry.add_argument("--max-queue-len", type=int, required=True,
                       help="largest queue length to tabulate")
    retry.add_argument("--out", default="msfq-out", help="output directory")
    retry.add_argument("--prefix", default="", help="output filename prefix")
    retry.set_defaults(handler=cmd_retry_prob)

    for name, handler, help_text in (
        ("simulate", cmd_simulate, "run one simulation: occupancy CSV + verdict JSON"),
        ("timeline", cmd_timeline, "run a multi-phase timeline: windowed metric CSV"),
        ("sweep", cmd_sweep, "classify a config grid: verdict/metric CSV"),
        ("msf", cmd_msf, "estimate the metastable-failure probability"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="run-configuration file")
        cmd.add_argument("--seed", type=int, default=None, help="override [simulation] seed")
        cmd.add_argument("--workers", type=int, default=None,
                         help="override [simulation] workers")
        cmd.add_argument("--out", default=None, help="override [output] directory")
        cmd.add_argument("--estimator", choices=[e.value for e in Estimator], default=None,
                         help="override occupancy estimator")
        if name == "msf":
            cmd.add_argument("--mode", choices=[m.value for m in MsfMode], default=None,
                             help="override failure-probability estimator mode")
        cmd.set_defaults(handler=handler)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = getattr(logging, os.environ.get("MSFQ_LOG", "WARNING").upper(), None)
    logging.basicConfig(level=level if isinstance(level, int) else logging.WARNING)
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ParameterError as exc:  # includes ConfigError
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except BaseUnstableError as exc:
        print(f"base system unstable: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
