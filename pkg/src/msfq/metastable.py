"""Trigger scenarios, stationary-set enumeration, and failure probability.

The enumeration walks the state grid row by row (orbit level, then queue
length) classifying each start state under the base configuration, stopping a
row at its first non-stationary state and stopping altogether when a row is
non-stationary already at queue 0. A trigger simulation then measures how
much probability the triggering event pushes beyond that stationary boundary:
that mass is the metastable-failure probability.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

from ._parallel import parallel_map
from ._rng import derive_seed
from .engine import SimulationSpec, simulate
from .errors import BaseUnstableError, ParameterError
from .model import ChainState, ModelConfig, validate_state
from .stability import classify

__all__ = [
    "TriggerScenario",
    "StationarySet",
    "MsfMode",
    "MsfReport",
    "enumerate_stationary_set",
    "is_stationary_state",
    "msf_probability",
    "msf_report",
]

logger = logging.getLogger(__name__)

_SEED_BRANCH_ENUM = 201
_SEED_BRANCH_TRIGGER = 202
_SEED_BRANCH_REPAIR = 203


@dataclass(frozen=True)
class TriggerScenario:
    """Base configuration, trigger configuration, and trigger duration."""

    base: ModelConfig
    trigger: ModelConfig
    trigger_duration: float

    def __post_init__(self) -> None:
        if not isinstance(self.base, ModelConfig) or not isinstance(self.trigger, ModelConfig):
            raise ParameterError("base and trigger must be ModelConfig instances")
        if not (isinstance(self.trigger_duration, (int, float))
                and math.isfinite(self.trigger_duration) and self.trigger_duration > 0):
            raise ParameterError(
                f"trigger_duration must be positive and finite, got {self.trigger_duration!r}"
            )


@dataclass(frozen=True)
class StationarySet:
    """Stationary states of a base config, described by their row frontier.

    frontier[i] is the largest stationary queue length at orbit level i; the
    states field materializes the downward-closed region. split_votes lists
    states whose majority vote was not unanimous (boundary noise flag).
    """

    frontier: tuple[int, ...]
    states: frozenset[ChainState]
    base_unstable: bool = False
    split_votes: tuple[ChainState, ...] = ()

    @classmethod
    def from_frontier(
        cls,
        frontier: tuple[int, ...],
        base_unstable: bool = False,
        split_votes: tuple[ChainState, ...] = (),
    ) -> "StationarySet":
        states = frozenset(
            ChainState(i, j) for i, fj in enumerate(frontier) for j in range(fj + 1)
        )
        return cls(frontier, states, base_unstable, split_votes)


def is_stationary_state(sset: StationarySet, state: ChainState) -> bool:
    """Frontier membership: stationary iff queue <= frontier[orbit].

    States at orbit levels beyond the enumerated rows are non-stationary
    (more backlog cannot make the same configuration more stable).
    """
    state = validate_state(state)
    if sset.base_unstable or state.orbit >= len(sset.frontier):
        return False
    return state.queue <= sset.frontier[state.orbit]


def _cell_votes(args) -> list[bool]:
    """Stationarity votes for one grid cell (picklable pool task)."""
    (base, duration, i, j, seeds, state_cap, window_count, growth_factor,
     burn_in_fraction) = args
    votes = []
    for s in seeds:
        spec = SimulationSpec(
            config=base,
            duration=duration,
            seed=s,
            initial=ChainState(i, j),
            state_cap=state_cap,
        )
        verdict, _ = classify(spec, window_count, growth_factor, burn_in_fraction)
        votes.append(verdict.stationary)
    return votes


class _Enumerator:
    def __init__(self, base, per_state_duration, replications, seed, state_cap,
                 window_count, growth_factor, burn_in_fraction, workers):
        self.base = base
        self.duration = per_state_duration
        self.replications = replications
        self.seed = seed
        self.state_cap = state_cap
        self.window_count = window_count
        self.growth_factor = growth_factor
        self.burn_in = burn_in_fraction
        self.workers = workers
        self.split: list[ChainState] = []

    def _task(self, i, j, branch):
        seeds = tuple(
            derive_seed(self.seed, branch, i, j, r) for r in range(self.replications)
        )
        return (self.base, self.duration, i, j, seeds, self.state_cap,
                self.window_count, self.growth_factor, self.burn_in)

    def _tally(self, state, votes) -> bool:
        ayes = sum(votes)
        if 0 < ayes < len(votes):
            self.split.append(state)
        return 2 * ayes > len(votes)

    def scan_row(self, i: int) -> int:
        """Largest stationary queue length at orbit i; -1 if none."""
        j = 0
        while True:
            chunk = max(1, self.workers)
            tasks = [self._task(i, j + k, _SEED_BRANCH_ENUM) for k in range(chunk)]
            results = parallel_map(_cell_votes, tasks, self.workers)
            for k, votes in enumerate(results):
                if not self._tally(ChainState(i, j + k), votes):
                    return j + k - 1
            j += chunk

    def repair_row(self, i: int, frontier_i: int, prev: int) -> int:
        """Re-vote cells past the previous row's frontier, then clamp.

        Majority re-runs give contested cells a second seed batch; combined
        ties resolve non-stationary. Downward closure is enforced regardless.
        """
        for j in range(prev + 1, frontier_i + 1):
            state = ChainState(i, j)
            first = _cell_votes(self._task(i, j, _SEED_BRANCH_ENUM))
            second = _cell_votes(self._task(i, j, _SEED_BRANCH_REPAIR))
            if not self._tally(state, first + second):
                return min(j - 1, prev)
        return prev


def enumerate_stationary_set(
    base: ModelConfig,
    per_state_duration: float = 500.0,
    replications: int = 3,
    *,
    seed: int = 0,
    state_cap: int = 500,
    window_count: int = 10,
    growth_factor: float = 2.0,
    burn_in_fraction: float = 0.1,
    workers: int = 1,
) -> StationarySet:
    """Enumerate the stationary states of ``base`` by per-state classification.

    Walks orbit rows upward; within a row walks queue lengths upward and stops
    at the first majority-non-stationary state; enumeration ends when a row is
    non-stationary already at queue 0. If the empty state (0, 0) itself is
    non-stationary the result is empty with base_unstable set.
    """
    if replications < 1:
        raise ParameterError(f"replications must be positive, got {replications}")
    if per_state_duration <= 0:
        raise ParameterError(
            f"per_state_duration must be positive, got {per_state_duration}"
        )
    enum = _Enumerator(base, per_state_duration, replications, seed, state_cap,
                       window_count, growth_factor, burn_in_fraction, workers)
    frontier: list[int] = []
    i = 0
    while True:
        row = enum.scan_row(i)
        if row < 0:
            if i == 0:
                return StationarySet.from_frontier((), base_unstable=True)
            break
        if i > 0 and row > frontier[i - 1]:
            row = enum.repair_row(i, row, frontier[i - 1])
        frontier.append(row)
        logger.info("stationary row %d: frontier queue length %d", i, row)
        i += 1
    return StationarySet.from_frontier(tuple(frontier), split_votes=tuple(enum.split))


class MsfMode(Enum):
    REPLICATION = "replication"
    PAPER_LITERAL = "paper-literal"


@dataclass(frozen=True)
class MsfReport:
    """Failure probability plus the artifacts behind it."""

    probability: float
    stationary_set: StationarySet
    mode: MsfMode
    trigger_replications: int
    non_stationary_replications: int
    diverged_replications: int


def msf_report(
    scenario: TriggerScenario,
    per_state_duration: float = 500.0,
    trigger_replications: int = 200,
    *,
    mode: MsfMode = MsfMode.REPLICATION,
    seed: int = 0,
    replications: int = 3,
    state_cap: int = 500,
    window_count: int = 10,
    growth_factor: float = 2.0,
    burn_in_fraction: float = 0.1,
    workers: int = 1,
) -> MsfReport:
    """Metastable-failure probability of a trigger scenario, with detail.

    Replication mode (default) runs independent trigger simulations from
    (0, 0) for the trigger duration and reports the fraction whose final
    state is non-stationary under the base config; a diverged replication
    counts as non-stationary. Paper-literal mode runs a single trigger
    simulation and sums its occupancy mass on non-stationary states,
    returning 1 outright when that run diverges.
    """
    if trigger_replications < 1:
        raise ParameterError(
            f"trigger_replications must be positive, got {trigger_replications}"
        )
    sset = enumerate_stationary_set(
        scenario.base,
        per_state_duration,
        replications,
        seed=seed,
        state_cap=state_cap,
        window_count=window_count,
        growth_factor=growth_factor,
        burn_in_fraction=burn_in_fraction,
        workers=workers,
    )
    if sset.base_unstable:
        raise BaseUnstableError(
            "the base configuration is non-stationary from the empty state; "
            "the system is metastable without any trigger"
        )
    if mode is MsfMode.PAPER_LITERAL:
        run = simulate(SimulationSpec(
            config=scenario.trigger,
            duration=scenario.trigger_duration,
            seed=derive_seed(seed, _SEED_BRANCH_TRIGGER, 0),
            state_cap=state_cap,
        ))
        if run.diverged:
            return MsfReport(1.0, sset, mode, 1, 1, 1)
        mass = sum(
            p for state, p in run.occupancy.items()
            if not is_stationary_state(sset, state)
        )
        return MsfReport(min(mass, 1.0), sset, mode, 1, 0, 0)
    specs = [
        SimulationSpec(
            config=scenario.trigger,
            duration=scenario.trigger_duration,
            seed=derive_seed(seed, _SEED_BRANCH_TRIGGER, r),
            state_cap=state_cap,
        )
        for r in range(trigger_replications)
    ]
    runs = parallel_map(simulate, specs, workers)
    diverged = sum(1 for r in runs if r.diverged)
    ns = sum(
        1 for r in runs
        if r.diverged or not is_stationary_state(sset, r.final_state)
    )
    return MsfReport(ns / trigger_replications, sset, mode, trigger_replications, ns, diverged)


def msf_probability(
    scenario: TriggerScenario,
    per_state_duration: float = 500.0,
    trigger_replications: int = 200,
    **kwargs,
) -> float:
    """Probability that the trigger leaves the system in a non-stationary state."""
    return msf_report(scenario, per_state_duration, trigger_replications, **kwargs).probability
