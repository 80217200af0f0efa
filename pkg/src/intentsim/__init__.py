"""Deterministic human-in-the-loop simulator for prompt-conditioned intent
inference: dual-layer Bayesian beliefs over areas and objects, a semantic
prior fused in as an explicit probability factor, and a threshold-based
commitment into shared-autonomy or autonomous assistance."""

__version__ = "0.1.0"

from .assistance import AssistState, CommitmentConfig, Phase
from .belief import BeliefParams, BeliefState
from .config import TrialConfig
from .harness import TrialMetrics, run_suite, run_trial
from .ontology import Ontology
from .perception import NoiseModel, SensorConfig, TrackMemory
from .semantics import SemanticParams, SemanticPrior
from .session import Session
from .world import Pose, Scenario, VelocityCommand, load_scenario

__all__ = [
    "AssistState",
    "BeliefParams",
    "BeliefState",
    "CommitmentConfig",
    "NoiseModel",
    "Ontology",
    "Phase",
    "Pose",
    "Scenario",
    "SemanticParams",
    "SemanticPrior",
    "SensorConfig",
    "Session",
    "TrackMemory",
    "TrialConfig",
    "TrialMetrics",
    "VelocityCommand",
    "load_scenario",
    "run_suite",
    "run_trial",
]
