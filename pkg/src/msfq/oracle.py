"""Independent correctness oracles: closed-form M/M/1 and a truncated solver.

These never touch the Monte Carlo path: the stationary distribution on a
truncated state box comes from a dense linear solve of the balance equations,
and the birth-death reduction has the textbook geometric law. Tests use both
to validate the simulation engine and the stability classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError
from .model import ChainState, ModelConfig, transitions

__all__ = [
    "TruncatedChain",
    "StationarySolution",
    "solve_stationary",
    "mm1_stationary",
]

_ROW_SUM_TOL = 1e-9
_RESIDUAL_TOL = 1e-8
_BOUNDARY_WARN_MASS = 0.01


@dataclass(frozen=True)
class StationarySolution:
    """Stationary distribution of a truncated chain plus diagnostics."""

    distribution: dict[ChainState, float]
    boundary_mass: float  # probability on the truncation edge rows/columns
    residual: float  # max |pi Q| balance defect

    @property
    def truncation_warning(self) -> bool:
        return self.boundary_mass >= _BOUNDARY_WARN_MASS


class TruncatedChain:
    """Dense generator matrix over the box orbit <= max_orbit, queue <= max_queue.

    Off-diagonal rates come straight from the transition kernel; transitions
    that would leave the box are redirected to the state they clip to (a clip
    onto the source state cancels the flow), and each diagonal entry is the
    negated row sum, so rows sum to zero exactly.
    """

    def __init__(self, config: ModelConfig, max_orbit: int, max_queue: int) -> None:
        if max_orbit < 0 or max_queue < 0:
            raise ParameterError("truncation bounds must be nonnegative")
        self.config = config
        self.max_orbit = max_orbit
        self.max_queue = max_queue
        ni, nj = max_orbit + 1, max_queue + 1
        n = ni * nj
        generator = np.zeros((n, n))
        for i in range(ni):
            for j in range(nj):
                src = i * nj + j
                for tr in transitions(config, ChainState(i, j)):
                    ti = min(tr.target.orbit, max_orbit)
                    tj = min(tr.target.queue, max_queue)
                    dst = ti * nj + tj
                    if dst != src:
                        generator[src, dst] += tr.rate
        np.fill_diagonal(generator, -generator.sum(axis=1))
        self.generator = generator

    def state_index(self, state: ChainState) -> int:
        return state.orbit * (self.max_queue + 1) + state.queue

    def index_state(self, index: int) -> ChainState:
        nj = self.max_queue + 1
        return ChainState(index // nj, index % nj)


def solve_stationary(chain: TruncatedChain) -> StationarySolution:
    """Solve pi Q = 0, sum(pi) = 1 by dense linear solve.

    One balance equation is replaced by the normalization row. The result
    carries the boundary mass so callers can see whether the truncation box
    was large enough (warning at >= 1%).
    """
    q = chain.generator
    n = q.shape[0]
    a = q.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"stationary solve failed: {exc}") from exc
    if not pi.min() >= -_ROW_SUM_TOL:  # inverted so NaN fails too
        raise NumericalError(f"stationary solve produced negative mass: {pi.min():.3e}")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(pi @ q).max())
    if not residual <= _RESIDUAL_TOL:
        raise NumericalError(f"stationary solve residual {residual:.3e} exceeds tolerance")
    nj = chain.max_queue + 1
    grid = pi.reshape(chain.max_orbit + 1, nj)
    boundary = float(grid[-1, :].sum() + grid[:, -1].sum() - grid[-1, -1])
    distribution = {
        ChainState(int(i), int(j)): float(grid[i, j])
        for i, j in zip(*np.nonzero(grid))
    }
    return StationarySolution(distribution, boundary, residual)


def mm1_stationary(rho: float, j: int) -> float:
    """Stationary queue-length law (1 - rho) * rho**j of the M/M/1 queue."""
    if not (isinstance(rho, (int, float)) and math.isfinite(rho) and 0.0 < rho < 1.0):
        raise ParameterError(f"rho must lie strictly inside (0, 1), got {rho!r}")
    if not isinstance(j, int) or j < 0:
        raise ParameterError(f"j must be a nonnegative integer, got {j!r}")
    return (1.0 - rho) * rho**j
