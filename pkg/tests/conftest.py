"""Shared test helpers: distribution distances and closed-form laws."""

from __future__ import annotations

import pytest

from msfq import ChainState, mm1_stationary


def tv_distance(p: dict, q: dict) -> float:
    """Total-variation distance between two distributions over chain states."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def geometric_law(rho: float, max_queue: int = 800) -> dict[ChainState, float]:
    """M/M/1 stationary law on (0, j) states, truncated far into the tail."""
    return {ChainState(0, j): mm1_stationary(rho, j) for j in range(max_queue + 1)}


@pytest.fixture
def tv():
    return tv_distance


@pytest.fixture
def geometric():
    return geometric_law
