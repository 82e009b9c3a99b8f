"""Distance-divergence metric and the stationary/non-stationary classifier.

A stable chain's occupancy settles, so the expected Euclidean distance of the
state from (0, 0) converges across observation windows; an unstable chain
accumulates backlog and the same metric keeps growing. The classifier turns
that contrast (plus the hard state-cap breach signal) into a verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping

from ._rng import derive_seed
from .engine import ChainSimulator, SimulationSpec
from .errors import ParameterError
from .model import ChainState

__all__ = [
    "VerdictReason",
    "StationarityVerdict",
    "DistanceTrajectory",
    "MajorityVerdict",
    "distance_metric",
    "classify",
    "majority_classify",
]

_SEED_BRANCH_MAJORITY = 101


class VerdictReason(Enum):
    CONVERGED = "converged"
    METRIC_GROWTH = "metric-growth"
    STATE_CAP_BREACH = "state-cap-breach"


@dataclass(frozen=True)
class StationarityVerdict:
    stationary: bool
    reason: VerdictReason
    final_metric: float  # last-window metric; meaningful only when stationary


@dataclass(frozen=True)
class DistanceTrajectory:
    """Distance metric of the cumulative occupancy at each window boundary."""

    windows: tuple[tuple[float, float], ...]  # (window_end_time, metric)


@dataclass(frozen=True)
class MajorityVerdict:
    stationary: bool
    votes_stationary: int
    votes_total: int
    split: bool  # votes were not unanimous
    final_metric: float  # median of the per-replication final metrics


def distance_metric(occupancy: Mapping[ChainState, float]) -> float:
    """Expected Euclidean distance from the empty state (0, 0).

    Input must be a probability distribution: nonnegative values summing to 1
    within 1e-6.
    """
    total = 0.0
    acc = 0.0
    for (orbit, queue), p in occupancy.items():
        if p < 0.0:
            raise ParameterError(f"occupancy of {(orbit, queue)} is negative: {p}")
        total += p
        acc += math.hypot(orbit, queue) * p
    if abs(total - 1.0) > 1e-6:
        raise ParameterError(f"occupancy must sum to 1 +- 1e-6, got {total}")
    return acc


def _lsq_slope(points: list[tuple[float, float]]) -> float:
    n = len(points)
    mean_t = sum(t for t, _ in points) / n
    mean_m = sum(m for _, m in points) / n
    num = sum((t - mean_t) * (m - mean_m) for t, m in points)
    den = sum((t - mean_t) ** 2 for t, _ in points)
    return num / den if den > 0 else 0.0


def classify(
    spec: SimulationSpec,
    window_count: int = 10,
    growth_factor: float = 2.0,
    burn_in_fraction: float = 0.1,
) -> tuple[StationarityVerdict, DistanceTrajectory]:
    """Classify one run as stationary or not via windowed distance metrics.

    The run is split into ``window_count`` equal windows after discarding the
    burn-in fraction; each boundary contributes the metric of the cumulative
    post-burn-in occupancy. Non-stationary iff the run breaches the state cap,
    or the final metric exceeds growth_factor times the first window's metric
    while the least-squares slope over the last half of the windows is
    positive. burn_in_fraction here is the classifier's own default (10%) and
    is independent of spec.burn_in_fraction, which only raw simulate() reads.
    """
    if window_count < 4:
        raise ParameterError(f"window_count must be at least 4, got {window_count}")
    if growth_factor <= 0:
        raise ParameterError(f"growth_factor must be positive, got {growth_factor}")
    if not 0.0 <= burn_in_fraction < 1.0:
        raise ParameterError(f"burn_in_fraction must be in [0, 1), got {burn_in_fraction}")
    sim = ChainSimulator(spec.config, spec.initial, spec.seed, spec.state_cap)
    burn = burn_in_fraction * spec.duration
    width = (spec.duration - burn) / window_count
    windows: list[tuple[float, float]] = []
    if burn > 0.0:
        sim.advance(burn)
    if not sim.diverged:
        sim.reset_statistics()
        for k in range(1, window_count + 1):
            sim.advance(burn + k * width)
            if sim.diverged:
                break
            occ = sim.occupancy(spec.estimator)
            windows.append((sim.time, distance_metric(occ)))
    trajectory = DistanceTrajectory(tuple(windows))
    last_metric = windows[-1][1] if windows else 0.0
    if sim.diverged:
        return (
            StationarityVerdict(False, VerdictReason.STATE_CAP_BREACH, last_metric),
            trajectory,
        )
    metrics = [m for _, m in windows]
    grew = metrics[-1] > growth_factor * metrics[0]
    slope = _lsq_slope(windows[len(windows) // 2 :])
    if grew and slope > 0.0:
        return (
            StationarityVerdict(False, VerdictReason.METRIC_GROWTH, last_metric),
            trajectory,
        )
    return StationarityVerdict(True, VerdictReason.CONVERGED, last_metric), trajectory


def majority_classify(
    spec: SimulationSpec,
    replications: int = 3,
    window_count: int = 10,
    growth_factor: float = 2.0,
    burn_in_fraction: float = 0.1,
) -> MajorityVerdict:
    """Majority stationarity vote over ``replications`` derived seeds.

    Replication r runs with derive_seed(spec.seed, 101, r); ties (even vote
    counts) resolve to non-stationary, the conservative side.
    """
    if replications < 1:
        raise ParameterError(f"replications must be positive, got {replications}")
    votes = 0
    finals: list[float] = []
    for r in range(replications):
        sub = replace(spec, seed=derive_seed(spec.seed, _SEED_BRANCH_MAJORITY, r))
        verdict, _ = classify(sub, window_count, growth_factor, burn_in_fraction)
        votes += verdict.stationary
        finals.append(verdict.final_metric)
    finals.sort()
    mid = len(finals) // 2
    median = finals[mid] if len(finals) % 2 else 0.5 * (finals[mid - 1] + finals[mid])
    return MajorityVerdict(
        stationary=2 * votes > replications,
        votes_stationary=votes,
        votes_total=replications,
        split=votes not in (0, replications),
        final_metric=median,
    )
