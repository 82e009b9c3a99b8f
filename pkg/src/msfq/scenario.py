"""Multi-phase timelines and parameter sweeps.

Timelines chain phases back to back over one chain trajectory, so backlog
built during a load surge carries into the recovery phase (the memory that
drives sustained failures). Sweeps classify a grid of configurations from the
empty state to map the stationary/non-stationary boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._parallel import parallel_map
from ._rng import derive_seed
from .engine import ChainSimulator, Estimator, SimulationSpec
from .errors import ParameterError
from .model import ChainState, ModelConfig, validate_state
from .stability import VerdictReason, classify, distance_metric

__all__ = [
    "Phase",
    "Timeline",
    "TimelineSample",
    "TimelineResult",
    "SweepPoint",
    "run_timeline",
    "run_sweep",
]

_SEED_BRANCH_SWEEP = 301


@dataclass(frozen=True)
class Phase:
    config: ModelConfig
    duration: float

    def __post_init__(self) -> None:
        if not isinstance(self.config, ModelConfig):
            raise ParameterError(f"phase config must be a ModelConfig, got {self.config!r}")
        if not (isinstance(self.duration, (int, float)) and math.isfinite(self.duration)
                and self.duration > 0):
            raise ParameterError(f"phase duration must be positive, got {self.duration!r}")


@dataclass(frozen=True)
class Timeline:
    """Ordered phases over a single chain; state carries across boundaries."""

    phases: tuple[Phase, ...]
    seed: int
    window_length: float
    initial: ChainState = ChainState(0, 0)
    state_cap: int = 500
    estimator: Estimator = Estimator.SOJOURN_TIME

    def __post_init__(self) -> None:
        object.__setattr__(self, "phases", tuple(self.phases))
        if not self.phases:
            raise ParameterError("timeline needs at least one phase")
        if not all(isinstance(p, Phase) for p in self.phases):
            raise ParameterError("timeline phases must be Phase instances")
        if not (isinstance(self.window_length, (int, float)) and self.window_length > 0):
            raise ParameterError(
                f"window_length must be positive, got {self.window_length!r}"
            )
        object.__setattr__(self, "initial", validate_state(self.initial))


@dataclass(frozen=True)
class TimelineSample:
    time: float
    state: ChainState
    metric: float
    phase_index: int


@dataclass(frozen=True)
class TimelineResult:
    """Windowed samples; a state-cap breach truncates the trace and sets diverged."""

    samples: tuple[TimelineSample, ...]
    diverged: bool
    final_state: ChainState
    final_time: float


def run_timeline(timeline: Timeline) -> TimelineResult:
    """Simulate the phases back to back, sampling per-window distance metrics.

    Window occupancy is per-window (reset at each boundary), so trigger
    effects and recovery are visible instead of being averaged away.
    Divergence stops the trace after one final partial-window sample.
    """
    sim = ChainSimulator(
        timeline.phases[0].config,
        timeline.initial,
        timeline.seed,
        timeline.state_cap,
    )
    samples: list[TimelineSample] = []
    start = 0.0
    for idx, phase in enumerate(timeline.phases):
        sim.set_config(phase.config)
        end = start + phase.duration
        k = 1
        while True:
            edge = min(start + k * timeline.window_length, end)
            sim.advance(edge)
            samples.append(TimelineSample(
                sim.time,
                sim.state,
                distance_metric(sim.occupancy(timeline.estimator)),
                idx,
            ))
            if sim.diverged:
                return TimelineResult(tuple(samples), True, sim.state, sim.time)
            sim.reset_statistics()
            if edge >= end:
                break
            k += 1
        start = end
    return TimelineResult(tuple(samples), False, sim.state, sim.time)


@dataclass(frozen=True)
class SweepPoint:
    config: ModelConfig
    stationary: bool
    reason: VerdictReason
    votes_stationary: int
    votes_total: int
    final_metric: float  # median across seeds


def _sweep_task(args) -> tuple[bool, VerdictReason, float]:
    config, duration, seed, state_cap, window_count, growth_factor, burn_in = args
    spec = SimulationSpec(config=config, duration=duration, seed=seed, state_cap=state_cap)
    verdict, _ = classify(spec, window_count, growth_factor, burn_in)
    return verdict.stationary, verdict.reason, verdict.final_metric


def run_sweep(
    grid: list[ModelConfig],
    per_point_duration: float,
    seeds: list[int],
    *,
    state_cap: int = 500,
    window_count: int = 10,
    growth_factor: float = 2.0,
    burn_in_fraction: float = 0.1,
    workers: int = 1,
) -> list[SweepPoint]:
    """Classify every grid config from (0, 0), majority-voted over ``seeds``.

    Rows come back in grid order with the median final metric, ready to pivot
    into curves or heatmaps.
    """
    grid = list(grid)
    seeds = list(seeds)
    if not grid:
        raise ParameterError("sweep grid must not be empty")
    if not seeds:
        raise ParameterError("sweep needs at least one seed")
    tasks = [
        (config, per_point_duration, derive_seed(seed, _SEED_BRANCH_SWEEP, gi),
         state_cap, window_count, growth_factor, burn_in_fraction)
        for gi, config in enumerate(grid)
        for seed in seeds
    ]
    results = parallel_map(_sweep_task, tasks, workers)
    points = []
    n = len(seeds)
    for gi, config in enumerate(grid):
        chunk = results[gi * n:(gi + 1) * n]
        ayes = sum(1 for stationary, _, _ in chunk if stationary)
        stationary = 2 * ayes > n
        # report the most severe reason among the majority side
        reasons = [r for s, r, _ in chunk if s == stationary]
        reason = VerdictReason.CONVERGED if stationary else (
            VerdictReason.STATE_CAP_BREACH
            if VerdictReason.STATE_CAP_BREACH in reasons
            else VerdictReason.METRIC_GROWTH
        )
        metrics = sorted(m for _, _, m in chunk)
        mid = n // 2
        median = metrics[mid] if n % 2 else 0.5 * (metrics[mid - 1] + metrics[mid])
        points.append(SweepPoint(config, stationary, reason, ayes, n, median))
    return points
