"""Distance-metric and classifier tests."""

import pytest

from msfq import (
    ChainState,
    ModelConfig,
    ParameterError,
    SimulationSpec,
    VerdictReason,
    classify,
    derive_seed,
    distance_metric,
    majority_classify,
    mm1_stationary,
)


# -------------------------------------------------------------- distance_metric


def test_all_mass_at_origin_scores_zero():
    assert distance_metric({ChainState(0, 0): 1.0}) == 0.0


def test_three_four_five_triangle():
    assert distance_metric({ChainState(3, 4): 1.0}) == 5.0


def test_geometric_marginal_matches_closed_form():
    # on (0, j) states the metric reduces to E[j] = rho/(1-rho) = 4/11
    rho = 4 / 15
    occupancy = {ChainState(0, j): mm1_stationary(rho, j) for j in range(400)}
    assert distance_metric(occupancy) == pytest.approx(4 / 11, abs=1e-9)


def test_metric_is_linear_in_the_distribution():
    a = {ChainState(0, 2): 0.5, ChainState(1, 1): 0.5}
    b = {ChainState(3, 4): 0.25, ChainState(0, 0): 0.75}
    alpha = 0.3
    mix = {}
    for dist, weight in ((a, alpha), (b, 1 - alpha)):
        for s, p in dist.items():
            mix[s] = mix.get(s, 0.0) + weight * p
    expected = alpha * distance_metric(a) + (1 - alpha) * distance_metric(b)
    assert distance_metric(mix) == pytest.approx(expected, rel=1e-12)


def test_metric_zero_only_at_origin():
    assert distance_metric({ChainState(0, 1): 0.001, ChainState(0, 0): 0.999}) > 0.0


def test_rejects_unnormalized_or_negative_input():
    with pytest.raises(ParameterError):
        distance_metric({ChainState(0, 0): 0.5})
    with pytest.raises(ParameterError):
        distance_metric({ChainState(0, 0): 1.5, ChainState(1, 1): -0.5})


# -------------------------------------------------------------------- classify


def _spec(lam, duration=1e4, seed=1234, **kwargs):
    cfg = ModelConfig(arrival_rate=lam, service_rate=15.0, timeout=1.0, retry_rate=1.0)
    return SimulationSpec(config=cfg, duration=duration, seed=seed, **kwargs)


def test_light_load_converges():
    verdict, trajectory = classify(_spec(4.0))
    assert verdict.stationary and verdict.reason is VerdictReason.CONVERGED
    # settled near the birth-death mean distance rho/(1-rho) = 4/11
    assert verdict.final_metric == pytest.approx(4 / 11, abs=0.05)
    times = [t for t, _ in trajectory.windows]
    assert times == sorted(times) and len(times) == 10


def test_moderate_load_converges():
    verdict, _ = classify(_spec(5.0))
    assert verdict.stationary


def test_retry_storm_breaches_cap():
    verdict, _ = classify(_spec(9.0, seed=31337))
    assert not verdict.stationary
    assert verdict.reason is VerdictReason.STATE_CAP_BREACH


def test_unbounded_growth_detected_without_cap_breach():
    # supercritical birth-death: backlog grows ~5/s, far below a 2000 cap
    cfg = ModelConfig(arrival_rate=20.0, service_rate=15.0, timeout=1.0,
                      disable_retries=True)
    spec = SimulationSpec(config=cfg, duration=100.0, seed=5, state_cap=2000)
    verdict, trajectory = classify(spec)
    assert not verdict.stationary
    assert verdict.reason is VerdictReason.METRIC_GROWTH
    metrics = [m for _, m in trajectory.windows]
    assert metrics[-1] > 2.0 * metrics[0]


def test_window_fluctuations_shrink_for_stationary_config():
    """Median last-3-window metric step stays under 10% of the final metric."""
    ratios = []
    for s in range(10):
        _, trajectory = classify(_spec(4.0, seed=derive_seed(99, s)))
        metrics = [m for _, m in trajectory.windows]
        deltas = sorted(abs(b - a) for a, b in zip(metrics[-4:], metrics[-3:]))
        ratios.append(deltas[1] / metrics[-1])
    ratios.sort()
    assert 0.5 * (ratios[4] + ratios[5]) < 0.10


def test_window_count_validated():
    with pytest.raises(ParameterError):
        classify(_spec(4.0), window_count=3)


# ----------------------------------------------------------- majority_classify


def test_majority_vote_is_unanimous_for_clear_cases():
    mv = majority_classify(_spec(4.0, seed=424242))
    assert mv.stationary and mv.votes_stationary == 3 and not mv.split
    mv = majority_classify(_spec(30.0, seed=424242))
    assert not mv.stationary and mv.votes_stationary == 0


def test_majority_vote_is_deterministic():
    assert majority_classify(_spec(5.0)) == majority_classify(_spec(5.0))


def test_majority_final_metric_is_median():
    mv = majority_classify(_spec(4.0, seed=7), replications=3)
    assert mv.final_metric == pytest.approx(4 / 11, abs=0.08)
