"""Monte Carlo simulation of the CTMC.

Follows the per-transition minimum-time scheme: from the current state, draw
t_k = -ln(1 - r)/rate_k for every outgoing transition and execute the minimum.
Occupancy is estimated either by sojourn time (default, the consistent CTMC
estimator) or by normalized visit counts (the transition-counter reading).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernel
from ._rng import derive_seed, xoshiro_state
from .errors import ParameterError
from .model import ChainState, ModelConfig, retry_probability, validate_state

__all__ = [
    "Estimator",
    "SimulationSpec",
    "SimulationResult",
    "ChainSimulator",
    "simulate",
    "sample_exponential",
    "derive_seed",
]

_TRAJ_BUFFER = 1 << 16
# occupancy accumulates on dense (cap+2)^2 grids; 4000 keeps that under ~260 MB
_MAX_STATE_CAP = 4000


class Estimator(Enum):
    SOJOURN_TIME = "sojourn"
    VISIT_COUNT = "visit"


@dataclass(frozen=True)
class SimulationSpec:
    """One reproducible simulation run.

    burn_in_fraction excludes the leading fraction of ``duration`` from the
    occupancy statistics (state and clock still advance through it); raw
    simulate() defaults to no burn-in. trajectory_stride records (time, state)
    after every stride-th executed transition (stride 1 = full path).
    """

    config: ModelConfig
    duration: float
    seed: int
    initial: ChainState = ChainState(0, 0)
    estimator: Estimator = Estimator.SOJOURN_TIME
    state_cap: int = 500
    burn_in_fraction: float = 0.0
    trajectory_stride: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.config, ModelConfig):
            raise ParameterError(f"config must be a ModelConfig, got {self.config!r}")
        if not (isinstance(self.duration, (int, float)) and math.isfinite(self.duration)
                and self.duration > 0):
            raise ParameterError(f"duration must be positive and finite, got {self.duration!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ParameterError(f"seed must be an integer, got {self.seed!r}")
        object.__setattr__(self, "initial", validate_state(self.initial))
        if not isinstance(self.estimator, Estimator):
            raise ParameterError(f"estimator must be an Estimator, got {self.estimator!r}")
        if not isinstance(self.state_cap, int) or isinstance(self.state_cap, bool):
            raise ParameterError(f"state_cap must be an integer, got {self.state_cap!r}")
        if self.state_cap <= self.initial.orbit + self.initial.queue:
            raise ParameterError(
                f"state_cap {self.state_cap} must exceed the initial occupancy "
                f"{self.initial.orbit + self.initial.queue}"
            )
        if self.state_cap > _MAX_STATE_CAP:
            raise ParameterError(
                f"state_cap {self.state_cap} exceeds the supported maximum {_MAX_STATE_CAP}"
            )
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ParameterError(
                f"burn_in_fraction must be in [0, 1), got {self.burn_in_fraction!r}"
            )
        if self.trajectory_stride is not None and (
            not isinstance(self.trajectory_stride, int) or self.trajectory_stride < 1
        ):
            raise ParameterError(
                f"trajectory_stride must be a positive integer or None, "
                f"got {self.trajectory_stride!r}"
            )


@dataclass(frozen=True)
class SimulationResult:
    """Outcome of one run; occupancy is empty when the run diverged."""

    occupancy: dict[ChainState, float]
    diverged: bool
    final_state: ChainState
    transitions_executed: int
    trajectory: tuple[tuple[float, ChainState], ...] | None = None


def sample_exponential(rate: float, r: float) -> float:
    """Inverse-CDF exponential draw -ln(1 - r)/rate for r in (0, 1)."""
    if not (isinstance(rate, (int, float)) and math.isfinite(rate) and rate > 0):
        raise ParameterError(f"rate must be positive and finite, got {rate!r}")
    if not (isinstance(r, (int, float)) and 0.0 < r < 1.0):
        raise ParameterError(f"r must lie strictly inside (0, 1), got {r!r}")
    return -math.log1p(-r) / rate


_ptable_cache: dict[tuple[float, bool, int], np.ndarray] = {}


def _retry_table(config: ModelConfig, size: int) -> np.ndarray:
    """Retry probabilities for queue lengths 0..size-1 as a dense array."""
    key = (config.service_rate * config.timeout, config.disable_retries, size)
    table = _ptable_cache.get(key)
    if table is None:
        table = np.array([retry_probability(config, j) for j in range(size)])
        table.setflags(write=False)
        _ptable_cache[key] = table
    return table


class ChainSimulator:
    """Resumable sampler for a single chain trajectory.

    advance() runs the kernel up to an absolute simulated time; statistics
    accumulate across calls until reset_statistics(). The configuration may be
    swapped between advances (phase changes); the chain state carries over.
    """

    def __init__(
        self,
        config: ModelConfig,
        initial: ChainState = ChainState(0, 0),
        seed: int = 0,
        state_cap: int = 500,
        trajectory_stride: int | None = None,
    ) -> None:
        initial = validate_state(initial)
        if state_cap <= initial.orbit + initial.queue:
            raise ParameterError(
                f"state_cap {state_cap} must exceed the initial occupancy "
                f"{initial.orbit + initial.queue}"
            )
        if state_cap > _MAX_STATE_CAP:
            raise ParameterError(
                f"state_cap {state_cap} exceeds the supported maximum {_MAX_STATE_CAP}"
            )
        self._config = config
        self._cap = state_cap
        self._ptable = _retry_table(config, state_cap + 2)
        self._rng = np.array(xoshiro_state(seed), dtype=np.uint64)
        self._i, self._j = initial
        self._t = 0.0
        self._executed = 0
        self._diverged = False
        side = state_cap + 2
        self._sojourn = np.zeros((side, side))
        self._visits = np.zeros((side, side), dtype=np.int64)
        self._max_i = initial.orbit
        self._max_j = initial.queue
        self._stride = 0 if trajectory_stride is None else trajectory_stride
        if self._stride:
            self._traj_t = np.empty(_TRAJ_BUFFER)
            self._traj_ij = np.empty((_TRAJ_BUFFER, 2), dtype=np.int64)
            self._trajectory: list[tuple[float, ChainState]] | None = [(0.0, initial)]
        else:
            self._traj_t = np.empty(0)
            self._traj_ij = np.empty((0, 2), dtype=np.int64)
            self._trajectory = None

    @property
    def state(self) -> ChainState:
        return ChainState(self._i, self._j)

    @property
    def time(self) -> float:
        return self._t

    @property
    def diverged(self) -> bool:
        return self._diverged

    @property
    def transitions_executed(self) -> int:
        return self._executed

    @property
    def config(self) -> ModelConfig:
        return self._config

    def set_config(self, config: ModelConfig) -> None:
        """Swap model parameters; the chain state and clock carry over."""
        self._config = config
        self._ptable = _retry_table(config, self._cap + 2)

    def advance(self, until: float) -> None:
        """Run until simulated time >= until, or until the state cap is hit."""
        if self._diverged:
            return
        cfg = self._config
        while True:
            (self._i, self._j, self._t, self._executed, self._max_i, self._max_j,
             exit_code, traj_n) = _kernel.advance(
                self._rng,
                self._i,
                self._j,
                self._t,
                until,
                cfg.arrival_rate,
                cfg.service_rate,
                cfg.retry_rate,
                self._ptable,
                self._sojourn,
                self._visits,
                self._cap,
                self._stride,
                self._executed,
                self._max_i,
                self._max_j,
                self._traj_t,
                self._traj_ij,
            )
            if traj_n and self._trajectory is not None:
                times = self._traj_t[:traj_n].tolist()
                pairs = self._traj_ij[:traj_n].tolist()
                self._trajectory.extend(
                    (tm, ChainState(ij[0], ij[1])) for tm, ij in zip(times, pairs)
                )
            if exit_code == _kernel.EXIT_TRAJ_FULL:
                continue
            if exit_code == _kernel.EXIT_DIVERGED:
                self._diverged = True
            return

    def occupancy(self, estimator: Estimator = Estimator.SOJOURN_TIME) -> dict[ChainState, float]:
        """Normalized occupancy distribution from the accumulated statistics.

        Falls back to all mass on the current state when nothing has been
        accumulated yet (e.g. visit counting before the first transition).
        """
        box = (slice(0, self._max_i + 1), slice(0, self._max_j + 1))
        grid = self._sojourn if estimator is Estimator.SOJOURN_TIME else self._visits
        region = grid[box]
        total = float(region.sum())
        if total <= 0.0:
            return {self.state: 1.0}
        ii, jj = np.nonzero(region)
        vals = region[ii, jj]
        return {
            ChainState(int(a), int(b)): float(v) / total
            for a, b, v in zip(ii.tolist(), jj.tolist(), vals.tolist())
        }

    def reset_statistics(self) -> None:
        """Zero the occupancy accumulators; chain state and clock keep going."""
        box = (slice(0, self._max_i + 1), slice(0, self._max_j + 1))
        self._sojourn[box] = 0.0
        self._visits[box] = 0
        self._max_i = self._i
        self._max_j = self._j

    def trajectory(self) -> tuple[tuple[float, ChainState], ...] | None:
        if self._trajectory is None:
            return None
        return tuple(self._trajectory)


def simulate(spec: SimulationSpec) -> SimulationResult:
    """Run one simulation to spec.duration; deterministic in (spec, seed).

    The state cap is not an error: a breach stops the run and is reported via
    ``diverged`` with the occupancy omitted.
    """
    sim = ChainSimulator(
        spec.config,
        spec.initial,
        spec.seed,
        spec.state_cap,
        spec.trajectory_stride,
    )
    if spec.burn_in_fraction > 0.0:
        sim.advance(spec.burn_in_fraction * spec.duration)
        if not sim.diverged:
            sim.reset_statistics()
    sim.advance(spec.duration)
    occupancy = {} if sim.diverged else sim.occupancy(spec.estimator)
    return SimulationResult(
        occupancy=occupancy,
        diverged=sim.diverged,
        final_state=sim.state,
        transitions_executed=sim.transitions_executed,
        trajectory=sim.trajectory(),
    )
