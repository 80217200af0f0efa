"""Simulated detector stage: field-of-view sensing with configurable noise,
plus a persistent track memory that the initial scan populates.

Detections stand in for the real detector+segmenter output: instead of image
crops, each detection carries a structured descriptor of the object so the
semantic scorer can run without any vision model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, DegenerateTarget
from .ontology import Ontology
from .world import TICK_DT, Pose, Scenario, VelocityCommand, bearing_to, distance

CONFIDENCE_FLOOR = 0.05
SMOOTHING = 0.5  # exponential confidence smoothing weight for new evidence


@dataclass(frozen=True)
class ObjectDescriptor:
    """Structured stand-in for an image crop; label may be noise-corrupted."""

    label: str
    category: str
    attributes: dict[str, str] = field(default_factory=dict)
    relations: tuple = ()


@dataclass(frozen=True)
class Detection:
    object_id: str  # ground-truth link; scoring consumers only see the descriptor
    observed_label: str
    confidence: float
    position_estimate: tuple[float, float]
    descriptor: ObjectDescriptor
    graspability: float = 1.0


@dataclass(frozen=True)
class NoiseModel:
    miss_prob: float = 0.0
    label_flip_prob: float = 0.0
    position_sigma: float = 0.0
    confidence_base: float = 1.0

    def validate(self) -> "NoiseModel":
        if not (0.0 <= self.miss_prob <= 1.0):
            raise ConfigError(f"noise.miss_prob must be in [0,1], got {self.miss_prob}")
        if not (0.0 <= self.label_flip_prob <= 1.0):
            raise ConfigError(f"noise.label_flip_prob must be in [0,1], got {self.label_flip_prob}")
        if self.position_sigma < 0.0:
            raise ConfigError(f"noise.position_sigma must be >= 0, got {self.position_sigma}")
        if not (0.0 < self.confidence_base <= 1.0):
            raise ConfigError(f"noise.confidence_base must be in (0,1], got {self.confidence_base}")
        return self


@dataclass(frozen=True)
class SensorConfig:
    fov_radius: float = 6.0
    fov_halfangle: float = math.pi / 3
    scan_rate: float = math.pi / 2  # rad/s spin during the initial scan

    def validate(self) -> "SensorConfig":
        if self.fov_radius <= 0:
            raise ConfigError(f"sensor.fov_radius must be > 0, got {self.fov_radius}")
        if not (0.0 < self.fov_halfangle <= math.pi):
            raise ConfigError(f"sensor.fov_halfangle must be in (0, pi], got {self.fov_halfangle}")
        if self.scan_rate <= 0:
            raise ConfigError(f"sensor.scan_rate must be > 0, got {self.scan_rate}")
        return self


@dataclass(frozen=True)
class Track:
    descriptor: ObjectDescriptor
    last_seen_tick: int
    smoothed_confidence: float
    position_estimate: tuple[float, float]
    graspability: float


@dataclass(frozen=True)
class TrackMemory:
    tracks: dict[str, Track] = field(default_factory=dict)

    def ids(self) -> list[str]:
        return sorted(self.tracks)

    def __len__(self) -> int:
        return len(self.tracks)


def _descriptor_for(obj, label: str) -> ObjectDescriptor:
    return ObjectDescriptor(
        label=label,
        category=obj.category,
        attributes=dict(obj.attributes),
        relations=obj.relations,
    )


def sense(
    scenario: Scenario,
    robot_pose: Pose,
    noise: NoiseModel,
    rng,
    sensor: SensorConfig = SensorConfig(),
    ontology: Ontology | None = None,
) -> list[Detection]:
    """Detect every object inside the FOV cone, subject to the noise model.

    Candidates are exactly the objects with range <= fov_radius and
    |bearing| <= fov_halfangle. Each candidate is independently dropped with
    miss_prob; surviving labels flip to a same-category sibling with
    label_flip_prob; positions get isotropic Gaussian jitter; confidence
    decays linearly with range and is clamped to [0.05, 1].
    """
    detections: list[Detection] = []
    for obj in scenario.objects:
        d = distance((robot_pose.x, robot_pose.y), obj.position)
        if d > sensor.fov_radius:
            continue
        try:
            bearing = bearing_to(robot_pose, obj.position)
        except DegenerateTarget:
            bearing = 0.0  # object directly under the robot is always in view
        if abs(bearing) > sensor.fov_halfangle:
            continue
        if noise.miss_prob > 0.0 and rng.uniform() < noise.miss_prob:
            continue
        label = obj.label
        if noise.label_flip_prob > 0.0 and rng.uniform() < noise.label_flip_prob:
            siblings = _sibling_labels(obj, scenario, ontology)
            if siblings:
                label = siblings[int(rng.integers(len(siblings)))]
        pos = obj.position
        if noise.position_sigma > 0.0:
            pos = (
                pos[0] + rng.normal(0.0, noise.position_sigma),
                pos[1] + rng.normal(0.0, noise.position_sigma),
            )
        confidence = noise.confidence_base * (1.0 - d / sensor.fov_radius)
        confidence = min(max(confidence, CONFIDENCE_FLOOR), 1.0)
        detections.append(
            Detection(
                object_id=obj.id,
                observed_label=label,
                confidence=confidence,
                position_estimate=pos,
                descriptor=_descriptor_for(obj, label),
                graspability=obj.graspability,
            )
        )
    return detections


def _sibling_labels(obj, scenario: Scenario, ontology: Ontology | None) -> list[str]:
    """Same-category labels a confused detector could emit instead."""
    if ontology is not None:
        pool = set(ontology.members(obj.category))
    else:
        pool = {o.label for o in scenario.objects if o.category == obj.category}
    pool.discard(obj.label)
    return sorted(pool)


def integrate(memory: TrackMemory, detections: list[Detection], tick: int) -> TrackMemory:
    """Fold detections into track memory; tracks persist for the whole trial."""
    if not detections:
        return memory
    tracks = dict(memory.tracks)
    for det in detections:
        prev = tracks.get(det.object_id)
        if prev is not None:
            conf = (1.0 - SMOOTHING) * prev.smoothed_confidence + SMOOTHING * det.confidence
        else:
            conf = det.confidence
        tracks[det.object_id] = Track(det.descriptor, tick, conf, det.position_estimate, det.graspability)
    return TrackMemory(tracks)


def scan_policy(
    robot_pose: Pose, ticks_elapsed: int, sensor: SensorConfig = SensorConfig(), dt: float = TICK_DT
) -> tuple[VelocityCommand, bool]:
    """Spin-in-place command for the initial survey.

    Returns (command, scan_complete); complete once the cumulative rotation
    reaches a full turn.
    """
    if sensor.scan_rate * dt * ticks_elapsed >= math.tau - 1e-9:
        return VelocityCommand.zero(), True
    return VelocityCommand(0.0, sensor.scan_rate), False
