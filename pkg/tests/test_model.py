"""Transition-kernel tests: retry probabilities and rate conservation.

Expected values marked "oracle" were computed by direct high-precision
summation (mpmath, 60 digits) of the Poisson series; the tests recompute the
small cases in-process to keep the oracle independent of the recurrence
implementation under test.
"""

import math
import random

import mpmath
import pytest

from msfq import (
    ChainState,
    ModelConfig,
    ParameterError,
    TransitionKind,
    flow_rates,
    poisson_cdf,
    retry_probability,
    transitions,
)
from msfq.model import validate_state

mpmath.mp.dps = 60


def poisson_cdf_oracle(k: int, mean: float) -> float:
    m = mpmath.mpf(mean)
    return float(sum(mpmath.e**-m * m**n / mpmath.factorial(n) for n in range(k + 1)))


# ---------------------------------------------------------------- poisson_cdf


def test_single_term_case():
    assert poisson_cdf(0, 15.0) == pytest.approx(3.059023205018258e-07, abs=1e-17)
    assert poisson_cdf(0, 15.0) == pytest.approx(math.exp(-15.0), rel=1e-15)


def test_queue_24_is_effectively_certain_retry():
    # oracle value 0.9888352197284497; the curve must clear 0.98 here
    p = poisson_cdf(24, 15.0)
    assert p == pytest.approx(0.9888352197284497, abs=1e-12)
    assert p >= 0.98


def test_saturates_far_above_mean():
    assert poisson_cdf(10_000, 1.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k,mean", [
    (0, 0.3), (1, 0.3), (5, 1.0), (17, 8.0), (24, 15.0),
    (60, 40.0), (120, 100.0), (200, 100.0), (200, 0.5), (3, 15.0),
])
def test_matches_direct_summation(k, mean):
    assert poisson_cdf(k, mean) == pytest.approx(poisson_cdf_oracle(k, mean), abs=1e-12)


def test_log_space_path_for_large_mean():
    # oracle values at mean=800 where exp(-mean) underflows
    assert poisson_cdf(750, 800.0) == pytest.approx(0.03897867395138005, abs=1e-12)
    assert poisson_cdf(900, 800.0) == pytest.approx(0.9997568905427099, abs=1e-12)
    assert poisson_cdf(0, 800.0) == 0.0  # underflows to zero: still a valid probability


def test_monotone_in_k_and_antitone_in_mean():
    values = [poisson_cdf(k, 15.0) for k in range(60)]
    assert all(b >= a for a, b in zip(values, values[1:]))
    means = [poisson_cdf(10, m) for m in (0.5, 2.0, 8.0, 15.0, 40.0)]
    assert all(b <= a for a, b in zip(means, means[1:]))


def test_result_clamped_to_unit_interval():
    for k in range(0, 400, 7):
        assert 0.0 <= poisson_cdf(k, 55.0) <= 1.0


@pytest.mark.parametrize("k,mean", [
    (-1, 1.0), (2.5, 1.0), (3, 0.0), (3, -2.0), (3, math.inf), (3, math.nan),
])
def test_rejects_bad_parameters(k, mean):
    with pytest.raises(ParameterError):
        poisson_cdf(k, mean)


# ---------------------------------------------------------- retry_probability


def test_retry_probability_empty_queue():
    cfg = ModelConfig(arrival_rate=4.0, service_rate=15.0, timeout=1.0)
    assert retry_probability(cfg, 0) == pytest.approx(3.059023205018258e-07, abs=1e-17)


def test_retry_probability_monotone_in_queue_length():
    cfg = ModelConfig(arrival_rate=4.0, service_rate=15.0, timeout=1.0)
    probs = [retry_probability(cfg, j) for j in range(50)]
    assert all(b >= a for a, b in zip(probs, probs[1:]))


def test_retry_probability_memoized():
    from msfq.model import _retry_cache

    cfg = ModelConfig(arrival_rate=1.0, service_rate=3.25, timeout=2.0)
    value = retry_probability(cfg, 7)
    assert (3.25 * 2.0, 7) in _retry_cache
    assert retry_probability(cfg, 7) == value


def test_retry_probability_disable_hook():
    cfg = ModelConfig(arrival_rate=4.0, service_rate=15.0, timeout=1.0,
                      disable_retries=True)
    assert retry_probability(cfg, 0) == 0.0
    assert retry_probability(cfg, 100) == 0.0


def test_retry_probability_rejects_negative_queue():
    cfg = ModelConfig(arrival_rate=4.0, service_rate=15.0, timeout=1.0)
    with pytest.raises(ParameterError):
        retry_probability(cfg, -1)


# ----------------------------------------------------------------- ModelConfig


def test_retry_rate_defaults_to_inverse_timeout_exactly():
    assert ModelConfig(arrival_rate=1.0, service_rate=1.0, timeout=8.0).retry_rate == 0.125
    assert ModelConfig(arrival_rate=1.0, service_rate=1.0, timeout=1.0).retry_rate == 1.0


@pytest.mark.parametrize("kwargs", [
    dict(arrival_rate=0.0, service_rate=1.0, timeout=1.0),
    dict(arrival_rate=-1.0, service_rate=1.0, timeout=1.0),
    dict(arrival_rate=1.0, service_rate=math.inf, timeout=1.0),
    dict(arrival_rate=1.0, service_rate=1.0, timeout=0.0),
    dict(arrival_rate=1.0, service_rate=1.0, timeout=1.0, retry_rate=-3.0),
    dict(arrival_rate=math.nan, service_rate=1.0, timeout=1.0),
])
def test_config_rejects_nonpositive_or_nonfinite(kwargs):
    with pytest.raises(ParameterError):
        ModelConfig(**kwargs)


def test_validate_state_rejects_bad_occupancies():
    for bad in (ChainState(-1, 0), ChainState(0, -2), (1.5, 0)):
        with pytest.raises(ParameterError):
            validate_state(bad)


# ----------------------------------------------------------------- transitions


def test_empty_system_has_only_arrival_branches():
    cfg = ModelConfig(arrival_rate=4.0, service_rate=15.0, timeout=1.0, retry_rate=1.0)
    out = transitions(cfg, ChainState(0, 0))
    assert [t.target for t in out] == [ChainState(0, 1), ChainState(1, 1)]
    p0 = math.exp(-15.0)
    assert out[0].rate == pytest.approx(4.0 * (1.0 - p0), rel=1e-12)
    assert out[1].rate == pytest.approx(4.0 * p0, rel=1e-12)
    assert out[0].kind is TransitionKind.ARRIVAL_NO_RETRY
    assert out[1].kind is TransitionKind.ARRIVAL_WITH_RETRY


def test_interior_state_emits_four_superposed_transitions():
    # P3 oracle value: PoissonCDF(3; 15) = 0.00021137850346676163
    cfg = ModelConfig(arrival_rate=4.0, service_rate=15.0, timeout=1.0, retry_rate=1.0)
    p3 = 0.00021137850346676163
    assert retry_probability(cfg, 3) == pytest.approx(p3, abs=1e-15)
    out = {t.target: t for t in transitions(cfg, ChainState(2, 3))}
    assert set(out) == {ChainState(2, 4), ChainState(3, 4), ChainState(2, 2), ChainState(1, 4)}
    assert out[ChainState(2, 4)].rate == pytest.approx(4.0 * (1 - p3) + 2.0 * p3, rel=1e-12)
    assert out[ChainState(3, 4)].rate == pytest.approx(4.0 * p3, rel=1e-12)
    assert out[ChainState(2, 2)].rate == 15.0
    assert out[ChainState(1, 4)].rate == pytest.approx(2.0 * (1 - p3), rel=1e-12)
    assert out[ChainState(2, 2)].kind is TransitionKind.DEPARTURE
    assert out[ChainState(1, 4)].kind is TransitionKind.RETRIAL_SUCCESS


def test_zero_rate_transitions_omitted():
    # mu*tau = 800 underflows the retry probability to exactly 0 at queue 0,
    # so the arrival-with-retry branch vanishes
    cfg = ModelConfig(arrival_rate=2.0, service_rate=800.0, timeout=1.0, retry_rate=1.0)
    out = transitions(cfg, ChainState(0, 0))
    assert [t.target for t in out] == [ChainState(0, 1)]
    out = transitions(cfg, ChainState(3, 0))
    assert [t.target for t in out] == [ChainState(0 + 3, 1), ChainState(2, 1)]


def test_all_arrivals_join_orbit_when_timeout_is_tiny():
    # mu*tau ~ 1.5e-8 drives the retry probability to 1 at any queue >= 2
    cfg = ModelConfig(arrival_rate=4.0, service_rate=15.0, timeout=1e-9, retry_rate=1.0)
    assert retry_probability(cfg, 5) == 1.0
    out = {t.target: t for t in transitions(cfg, ChainState(0, 5))}
    assert ChainState(1, 6) in out and out[ChainState(1, 6)].rate == 4.0
    assert ChainState(0, 6) not in out  # no-retry arrival flow vanished
    out = {t.target: t for t in transitions(cfg, ChainState(2, 5))}
    assert out[ChainState(2, 6)].rate == pytest.approx(2.0, rel=1e-12)  # re-retries only
    assert ChainState(1, 6) not in out  # retrial success flow vanished


def test_transitions_never_leave_valid_region():
    cfg = ModelConfig(arrival_rate=3.0, service_rate=5.0, timeout=0.5)
    rng = random.Random(7)
    for _ in range(500):
        state = ChainState(rng.randrange(0, 40), rng.randrange(0, 40))
        for tr in transitions(cfg, state):
            assert tr.target.orbit >= 0 and tr.target.queue >= 0
            assert tr.rate > 0.0
            assert tr.target != state


# ------------------------------------------------------------ rate conservation


def _random_config(rng: random.Random) -> ModelConfig:
    return ModelConfig(
        arrival_rate=rng.uniform(0.1, 60.0),
        service_rate=rng.uniform(0.1, 60.0),
        timeout=rng.uniform(0.05, 10.0),
        retry_rate=rng.uniform(0.05, 10.0),
    )


def test_flow_conservation_on_random_states():
    rng = random.Random(20240810)
    for _ in range(1000):
        cfg = _random_config(rng)
        state = ChainState(rng.randrange(0, 200), rng.randrange(0, 200))
        flows = flow_rates(cfg, state)
        arrivals = flows[TransitionKind.ARRIVAL_NO_RETRY] + flows[TransitionKind.ARRIVAL_WITH_RETRY]
        retrials = flows[TransitionKind.RETRIAL_SUCCESS] + flows[TransitionKind.RETRIAL_RE_RETRY]
        assert arrivals == pytest.approx(cfg.arrival_rate, rel=1e-14)
        assert retrials == pytest.approx(state.orbit * cfg.retry_rate, rel=1e-14)


def test_total_exit_rate_matches_flow_sum():
    rng = random.Random(99)
    for _ in range(300):
        cfg = _random_config(rng)
        state = ChainState(rng.randrange(0, 50), rng.randrange(0, 50))
        expected = cfg.arrival_rate + state.orbit * cfg.retry_rate
        expected += cfg.service_rate if state.queue > 0 else 0.0
        total = sum(t.rate for t in transitions(cfg, state))
        assert total == pytest.approx(expected, rel=1e-12)


def test_superposed_rates_equal_flow_aggregation():
    rng = random.Random(123)
    for _ in range(300):
        cfg = _random_config(rng)
        state = ChainState(rng.randrange(0, 30), rng.randrange(0, 30))
        flows = flow_rates(cfg, state)
        merged = {t.target: t.rate for t in transitions(cfg, state)}
        up = flows[TransitionKind.ARRIVAL_NO_RETRY] + flows[TransitionKind.RETRIAL_RE_RETRY]
        if up > 0:
            assert merged[ChainState(state.orbit, state.queue + 1)] == pytest.approx(up, rel=1e-14)
