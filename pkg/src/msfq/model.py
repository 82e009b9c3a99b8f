"""Model parameters, retry probability, and the CTMC transition kernel.

The model is a two-dimensional continuous-time Markov chain over states
(orbit, queue): an unbounded primary queue fed by Poisson arrivals plus a
retrial orbit holding requests that timed out and will be retried. Every
other module consumes the transition rates defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .errors import ParameterError

# exp(-mean) underflows near mean ~ 745; switch to log-space summation before that
_LOG_SPACE_MEAN = 700.0


class TransitionKind(Enum):
    ARRIVAL_NO_RETRY = "arrival-no-retry"
    ARRIVAL_WITH_RETRY = "arrival-with-retry"
    DEPARTURE = "departure"
    RETRIAL_SUCCESS = "retrial-success"
    RETRIAL_RE_RETRY = "retrial-re-retry"


class ChainState(NamedTuple):
    """A point (orbit occupancy, primary-queue occupancy) in the state space."""

    orbit: int
    queue: int


class Transition(NamedTuple):
    """One outgoing transition after superposition of same-target flows.

    ``kind`` labels the dominant flow: the (orbit, queue+1) target combines
    the no-retry arrival flow with the orbit re-retry flow (both cause the
    same net state change), and is labeled ARRIVAL_NO_RETRY. Use
    :func:`flow_rates` when the five elementary flows are needed separately.
    """

    target: ChainState
    rate: float
    kind: TransitionKind


@dataclass(frozen=True)
class ModelConfig:
    """Parameter set of the retrial queuing model.

    arrival_rate: external Poisson arrival rate (requests/second).
    service_rate: exponential service rate of the primary queue.
    timeout: client timeout in seconds.
    retry_rate: per-request retrial rate of orbit occupants; defaults to
        1/timeout when not given.
    disable_retries: test hook forcing the retry probability to 0, which
        reduces the model to a plain birth-death (M/M/1) queue.
    """

    arrival_rate: float
    service_rate: float
    timeout: float
    retry_rate: float | None = None
    disable_retries: bool = False

    def __post_init__(self) -> None:
        for name in ("arrival_rate", "service_rate", "timeout"):
            _require_positive_finite(name, getattr(self, name))
        if self.retry_rate is None:
            object.__setattr__(self, "retry_rate", 1.0 / self.timeout)
        else:
            _require_positive_finite("retry_rate", self.retry_rate)


def _require_positive_finite(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ParameterError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} must be strictly positive and finite, got {value}")


def validate_state(state: ChainState) -> ChainState:
    """Check nonnegative integer occupancies; returns the state for chaining."""
    orbit, queue = state
    if not (isinstance(orbit, int) and isinstance(queue, int)):
        raise ParameterError(f"state occupancies must be integers, got {state!r}")
    if orbit < 0 or queue < 0:
        raise ParameterError(f"state occupancies must be nonnegative, got {state!r}")
    return ChainState(orbit, queue)


def poisson_cdf(k: int, mean: float) -> float:
    """P(N <= k) for N ~ Poisson(mean), clamped to [0, 1].

    Terms are accumulated by the multiplicative recurrence
    term_{n+1} = term_n * mean/(n+1), so no factorials are formed; for
    mean > 700 the sum runs in log space to dodge exp underflow.
    """
    if not isinstance(k, int) or isinstance(k, bool):
        raise ParameterError(f"k must be an integer, got {k!r}")
    if k < 0:
        raise ParameterError(f"k must be nonnegative, got {k}")
    if not isinstance(mean, (int, float)) or not math.isfinite(mean) or mean <= 0:
        raise ParameterError(f"mean must be positive and finite, got {mean!r}")
    if mean > _LOG_SPACE_MEAN:
        return _poisson_cdf_logspace(k, mean)
    term = math.exp(-mean)
    total = term
    for n in range(1, k + 1):
        term *= mean / n
        total += term
        if term == 0.0 and n > mean:
            break  # remaining terms are below subnormal resolution
    return min(max(total, 0.0), 1.0)


def _poisson_cdf_logspace(k: int, mean: float) -> float:
    log_mean = math.log(mean)
    log_term = -mean  # n = 0
    log_total = log_term
    for n in range(1, k + 1):
        log_term += log_mean - math.log(n)
        hi, lo = (log_total, log_term) if log_total >= log_term else (log_term, log_total)
        log_total = hi + math.log1p(math.exp(lo - hi))
        if n > mean and log_total - log_term > 45.0:
            break  # tail terms decay geometrically; remainder < e^-40 of total
    return min(math.exp(log_total), 1.0) if log_total < 0.0 else 1.0


_retry_cache: dict[tuple[float, int], float] = {}


def retry_probability(config: ModelConfig, queue_len: int) -> float:
    """Probability that a request arriving behind ``queue_len`` others times out.

    Equals PoissonCDF(queue_len; service_rate * timeout): the request retries
    iff at most queue_len services complete within the timeout window.
    Memoized per (service_rate * timeout, queue_len); the cache is only ever
    written with idempotent values, so concurrent readers are safe.
    """
    if not isinstance(queue_len, int) or queue_len < 0:
        raise ParameterError(f"queue_len must be a nonnegative integer, got {queue_len!r}")
    if config.disable_retries:
        return 0.0
    key = (config.service_rate * config.timeout, queue_len)
    p = _retry_cache.get(key)
    if p is None:
        p = poisson_cdf(queue_len, key[0])
        _retry_cache[key] = p
    return p


def flow_rates(config: ModelConfig, state: ChainState) -> dict[TransitionKind, float]:
    """The five elementary flows out of ``state`` before superposition.

    Conservation holds exactly: the two arrival flows sum to arrival_rate and
    the two retrial flows sum to orbit * retry_rate.
    """
    state = validate_state(state)
    p = retry_probability(config, state.queue)
    lam = config.arrival_rate
    retrial = state.orbit * config.retry_rate
    return {
        TransitionKind.ARRIVAL_NO_RETRY: lam * (1.0 - p),
        TransitionKind.ARRIVAL_WITH_RETRY: lam * p,
        TransitionKind.DEPARTURE: config.service_rate if state.queue > 0 else 0.0,
        TransitionKind.RETRIAL_SUCCESS: retrial * (1.0 - p),
        TransitionKind.RETRIAL_RE_RETRY: retrial * p,
    }


def transitions(config: ModelConfig, state: ChainState) -> list[Transition]:
    """Outgoing transitions from ``state`` with same-target flows superposed.

    Emits at most four records, in fixed order:
      (i, j+1)   no-retry arrivals plus orbit re-retries
      (i+1, j+1) arrivals that will time out and join the orbit
      (i, j-1)   departure, only when the queue is nonempty
      (i-1, j+1) orbit retrial that succeeds, only when the orbit is nonempty
    Zero-rate transitions are omitted. The emission order is part of the
    reproducibility contract: the simulation engine consumes one random
    number per emitted transition in this order.
    """
    state = validate_state(state)
    i, j = state
    p = retry_probability(config, j)
    lam = config.arrival_rate
    mu0 = config.retry_rate
    out: list[Transition] = []
    rate_up = lam * (1.0 - p) + i * mu0 * p
    if rate_up > 0.0:
        out.append(Transition(ChainState(i, j + 1), rate_up, TransitionKind.ARRIVAL_NO_RETRY))
    rate_orbit = lam * p
    if rate_orbit > 0.0:
        out.append(
            Transition(ChainState(i + 1, j + 1), rate_orbit, TransitionKind.ARRIVAL_WITH_RETRY)
        )
    if j > 0:
        out.append(Transition(ChainState(i, j - 1), config.service_rate, TransitionKind.DEPARTURE))
    rate_retrial = i * mu0 * (1.0 - p)
    if rate_retrial > 0.0:
        out.append(
            Transition(ChainState(i - 1, j + 1), rate_retrial, TransitionKind.RETRIAL_SUCCESS)
        )
    return out
