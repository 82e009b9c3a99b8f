"""Retrial-queue CTMC simulation of retry-storm metastability.

A two-dimensional continuous-time Markov chain couples a primary M/M/1 queue
with a retrial orbit of timed-out requests. The package simulates the chain,
classifies configurations as stationary or not via a distance-divergence
metric, enumerates the stationary state region, and estimates the probability
that a temporary load surge or capacity drop leaves the system stuck in a
non-stationary (metastable) regime.
"""

from .engine import (
    ChainSimulator,
    Estimator,
    SimulationResult,
    SimulationSpec,
    derive_seed,
    sample_exponential,
    simulate,
)
from .errors import BaseUnstableError, ConfigError, NumericalError, ParameterError
from .metastable import (
    MsfMode,
    MsfReport,
    StationarySet,
    TriggerScenario,
    enumerate_stationary_set,
    is_stationary_state,
    msf_probability,
    msf_report,
)
from .model import (
    ChainState,
    ModelConfig,
    Transition,
    TransitionKind,
    flow_rates,
    poisson_cdf,
    retry_probability,
    transitions,
)
from .oracle import StationarySolution, TruncatedChain, mm1_stationary, solve_stationary
from .scenario import (
    Phase,
    SweepPoint,
    Timeline,
    TimelineResult,
    TimelineSample,
    run_sweep,
    run_timeline,
)
from .stability import (
    DistanceTrajectory,
    MajorityVerdict,
    StationarityVerdict,
    VerdictReason,
    classify,
    distance_metric,
    majority_classify,
)

__version__ = "0.1.0"

__all__ = [
    "BaseUnstableError",
    "ChainSimulator",
    "ChainState",
    "ConfigError",
    "DistanceTrajectory",
    "Estimator",
    "MajorityVerdict",
    "ModelConfig",
    "MsfMode",
    "MsfReport",
    "NumericalError",
    "ParameterError",
    "Phase",
    "SimulationResult",
    "SimulationSpec",
    "StationarySet",
    "StationarySolution",
    "StationarityVerdict",
    "SweepPoint",
    "Timeline",
    "TimelineResult",
    "TimelineSample",
    "Transition",
    "TransitionKind",
    "TriggerScenario",
    "TruncatedChain",
    "VerdictReason",
    "classify",
    "derive_seed",
    "distance_metric",
    "enumerate_stationary_set",
    "flow_rates",
    "is_stationary_state",
    "majority_classify",
    "mm1_stationary",
    "msf_probability",
    "msf_report",
    "poisson_cdf",
    "retry_probability",
    "run_sweep",
    "run_timeline",
    "sample_exponential",
    "simulate",
    "solve_stationary",
    "transitions",
    "__version__",
]
