"""Scripted operator behaviors so headless trials are reproducible.

Profiles steer toward a ground-truth target (optionally with bearing noise
or a mid-trial intent switch), emit scheduled prompt updates, and answer
suggestions per a fixed accept policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .assistance import Phase
from .errors import ConfigError, DegenerateTarget
from .world import Limits, Pose, Scenario, VelocityCommand, bearing_to, wrap_angle

OPERATOR_KINDS = ("direct", "noisy", "intent_switch", "idle")


@dataclass(frozen=True)
class OperatorProfile:
    kind: str = "idle"
    target: str | None = None
    switch_tick: int | None = None
    switch_target: str | None = None
    noise_sigma: float = 0.0  # radians on the steering bearing
    prompt_schedule: tuple[tuple[int, str], ...] = ()
    accept_policy: str = "always"  # always | never | delay
    accept_delay_ticks: int = 0
    v_op: float = 0.8  # m/s cruise speed
    steering_gain: float = 1.5

    def validate(self) -> "OperatorProfile":
        if self.kind not in OPERATOR_KINDS:
            raise ConfigError(f"operator.kind must be one of {OPERATOR_KINDS}, got {self.kind!r}")
        if self.kind in ("direct", "noisy", "intent_switch") and not self.target:
            raise ConfigError(f"operator.kind={self.kind!r} requires a target")
        if self.kind == "intent_switch" and (self.switch_tick is None or not self.switch_target):
            raise ConfigError("operator.kind=intent_switch requires switch_tick and switch_target")
        if self.noise_sigma < 0:
            raise ConfigError(f"operator.noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.accept_policy not in ("always", "never", "delay"):
            raise ConfigError(f"operator.accept_policy must be always/never/delay, got {self.accept_policy!r}")
        return self


@dataclass(frozen=True)
class OperatorEvent:
    cmd: VelocityCommand | None = None
    prompt: str | None = None
    decision: str | None = None  # accept | reject


def operator_tick(
    profile: OperatorProfile,
    robot: Pose,
    scenario: Scenario,
    tick: int,
    rng,
    *,
    phase: Phase | None = None,
    suggested_since: int | None = None,
    ceded: bool = False,
    limits: Limits = Limits(),
) -> OperatorEvent:
    """One operator decision: a steering command, scheduled prompts, and
    accept/reject answers while a suggestion is pending.

    `ceded` marks ticks where the scripted operator defers to the robot
    (scan phase and autonomous assistance) and emits a zero command.
    """
    prompt = None
    for t, text in profile.prompt_schedule:
        if t == tick:
            prompt = text
            break

    decision = None
    if phase == Phase.SUGGESTED:
        if profile.accept_policy == "always":
            decision = "accept"
        elif profile.accept_policy == "never":
            decision = "reject"
        elif suggested_since is not None and tick - suggested_since >= profile.accept_delay_ticks:
            decision = "accept"

    if profile.kind == "idle" or ceded:
        return OperatorEvent(cmd=VelocityCommand.zero(), prompt=prompt, decision=decision)

    target_id = profile.target
    if profile.kind == "intent_switch" and profile.switch_tick is not None and tick >= profile.switch_tick:
        target_id = profile.switch_target
    obj = scenario.object_by_id(target_id)
    if obj is None:
        raise ConfigError(f"operator target '{target_id}' not in scenario")
    try:
        bearing = bearing_to(robot, obj.position)
    except DegenerateTarget:
        return OperatorEvent(cmd=VelocityCommand.zero(), prompt=prompt, decision=decision)
    if profile.kind == "noisy" and profile.noise_sigma > 0.0:
        bearing = wrap_angle(bearing + rng.normal(0.0, profile.noise_sigma))
    v = profile.v_op if abs(bearing) < math.pi / 4 else 0.0
    cmd = limits.clamp(VelocityCommand(v, profile.steering_gain * bearing))
    return OperatorEvent(cmd=cmd, prompt=prompt, decision=decision)
