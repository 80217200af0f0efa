"""Commitment rule and assistance behaviors.

A finite state machine carries the robot from inference into shared-autonomy
or autonomous assistance once the top posterior has strictly exceeded the
confidence threshold for a sustained dwell, optionally gated on operator
acceptance. Controllers implement the two assistance modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from .belief import BeliefState
from .errors import ConfigError
from .world import Limits, Pose, VelocityCommand, bearing_to, distance


class Phase(str, Enum):
    SCAN = "scan"
    INFERENCE = "inference"
    SUGGESTED = "suggested"
    ASSISTING = "assisting"
    REACHED = "reached"
    ABORTED = "aborted"


@dataclass(frozen=True)
class CommitmentConfig:
    threshold: float = 0.85  # posterior the top candidate must strictly exceed
    dwell_ticks: int = 10  # consecutive exceedances required before suggesting
    policy: str = "auto_commit"  # auto_commit | require_accept
    mode: str = "autonomous"  # autonomous | shared
    blend_gain: float = 1.0  # maps confidence margin to assist authority
    override_v: float = 0.25  # m/s; operator command above this is an override
    override_omega: float = 0.5  # rad/s
    cooldown_ticks: int | None = None  # rejected-target exclusion; default 2 * dwell
    grasp_hold_ticks: int = 20  # timed grasp proxy at the reach radius
    align_tolerance: float = 0.2  # rad; rotate in place above this bearing error
    k_v: float = 1.0
    k_omega: float = 2.0

    def validate(self) -> "CommitmentConfig":
        if not (0.0 < self.threshold < 1.0):
            raise ConfigError(f"commitment.threshold must be in (0,1), got {self.threshold}")
        if self.dwell_ticks < 1:
            raise ConfigError(f"commitment.dwell_ticks must be >= 1, got {self.dwell_ticks}")
        if self.policy not in ("auto_commit", "require_accept"):
            raise ConfigError(f"commitment.policy must be auto_commit or require_accept, got {self.policy!r}")
        if self.mode not in ("autonomous", "shared"):
            raise ConfigError(f"commitment.mode must be autonomous or shared, got {self.mode!r}")
        if not (0.0 <= self.blend_gain <= 1.0):
            raise ConfigError(f"commitment.blend_gain must be in [0,1], got {self.blend_gain}")
        return self

    def cooldown(self) -> int:
        return self.cooldown_ticks if self.cooldown_ticks is not None else 2 * self.dwell_ticks


@dataclass(frozen=True)
class AssistState:
    phase: Phase = Phase.SCAN
    committed_target: str | None = None
    dwell_count: int = 0
    dwell_target: str | None = None
    commit_tick: int | None = None
    suggested_tick: int | None = None
    reach_tick: int | None = None
    cooldowns: dict[str, int] = field(default_factory=dict)  # target id -> last excluded tick
    reason: str | None = None  # why the last transition happened (for the trace)


def _clear(fsm: AssistState, phase: Phase, reason: str) -> AssistState:
    return replace(
        fsm,
        phase=phase,
        committed_target=None,
        dwell_count=0,
        dwell_target=None,
        commit_tick=None,
        suggested_tick=None,
        reach_tick=None,
        reason=reason,
    )


def commitment_step(
    fsm: AssistState,
    belief: BeliefState,
    operator_event,
    cfg: CommitmentConfig,
    tick: int,
    *,
    reach: bool = False,
) -> AssistState:
    """Advance the FSM one tick; called once per tick after the belief update.

    Dwell counts consecutive ticks where the same top candidate strictly
    exceeds the threshold; any dip or identity change resets it. Rejected
    suggestions go on cooldown. During assistance, an operator override (in
    autonomous mode) or a belief collapse on the committed target aborts.
    """
    decision = getattr(operator_event, "decision", None) if operator_event is not None else None
    cmd = getattr(operator_event, "cmd", None) if operator_event is not None else None

    if fsm.phase in (Phase.SCAN, Phase.REACHED):
        return fsm

    if fsm.phase == Phase.ABORTED:
        return _clear(fsm, Phase.INFERENCE, "resume_inference")

    if fsm.phase == Phase.INFERENCE:
        top = belief.top
        eligible = (
            top is not None
            and top[1] > cfg.threshold  # strict: equality does not count
            and tick > fsm.cooldowns.get(top[0], -1)
        )
        if not eligible:
            return replace(fsm, dwell_count=0, dwell_target=None)
        dwell = fsm.dwell_count + 1 if fsm.dwell_target == top[0] else 1
        if dwell >= cfg.dwell_ticks:
            out = replace(
                fsm,
                phase=Phase.SUGGESTED,
                committed_target=top[0],
                dwell_count=cfg.dwell_ticks,
                dwell_target=top[0],
                suggested_tick=tick,
                reason="suggested",
            )
            if cfg.policy == "auto_commit":
                out = replace(out, phase=Phase.ASSISTING, commit_tick=tick, reason="committed")
            return out
        return replace(fsm, dwell_count=dwell, dwell_target=top[0])

    if fsm.phase == Phase.SUGGESTED:
        if decision == "accept":
            return replace(fsm, phase=Phase.ASSISTING, commit_tick=tick, reason="accepted")
        if decision == "reject":
            cooldowns = dict(fsm.cooldowns)
            cooldowns[fsm.committed_target] = tick + cfg.cooldown()
            return replace(
                _clear(fsm, Phase.INFERENCE, "rejected"),
                cooldowns=cooldowns,
            )
        return fsm

    # Phase.ASSISTING
    if fsm.reach_tick is None and reach:
        fsm = replace(fsm, reach_tick=tick, reason="reach")
    if fsm.reach_tick is not None:
        if tick - fsm.reach_tick >= cfg.grasp_hold_ticks:
            return replace(fsm, phase=Phase.REACHED, reason="reached")
        return fsm
    if (
        cfg.mode == "autonomous"
        and cmd is not None
        and (abs(cmd.v) > cfg.override_v or abs(cmd.omega) > cfg.override_omega)
    ):
        return _clear(fsm, Phase.ABORTED, "override")
    p_committed = belief.posterior.get(fsm.committed_target, 0.0)
    top = belief.top
    if top is not None and top[0] != fsm.committed_target and p_committed < cfg.threshold / 2.0:
        return _clear(fsm, Phase.ABORTED, "belief_collapse")
    return fsm


def autonomous_controller(
    robot: Pose,
    target: tuple[float, float],
    reach_radius: float,
    cfg: CommitmentConfig = CommitmentConfig(),
    limits: Limits = Limits(),
) -> tuple[VelocityCommand, bool]:
    """Rotate-then-drive toward the target; returns (command, reached)."""
    d = distance((robot.x, robot.y), target)
    if d <= reach_radius:
        return VelocityCommand.zero(), True
    b = bearing_to(robot, target)
    if abs(b) > cfg.align_tolerance:
        return limits.clamp(VelocityCommand(0.0, cfg.k_omega * b)), False
    return limits.clamp(VelocityCommand(cfg.k_v * d, cfg.k_omega * b)), False


def _opposes(operator_cmd: VelocityCommand, assist_cmd: VelocityCommand, cfg: CommitmentConfig) -> bool:
    return (abs(operator_cmd.v) > cfg.override_v and operator_cmd.v * assist_cmd.v < 0) or (
        abs(operator_cmd.omega) > cfg.override_omega and operator_cmd.omega * assist_cmd.omega < 0
    )


def shared_autonomy_blend(
    operator_cmd: VelocityCommand,
    assist_cmd: VelocityCommand,
    confidence: float,
    cfg: CommitmentConfig = CommitmentConfig(),
    limits: Limits = Limits(),
) -> VelocityCommand:
    """Authority-weighted mix of operator and assist commands.

    Authority rises linearly from 0 at the threshold to blend_gain at full
    confidence. An operator command that actively opposes the assist
    direction above the override threshold takes full control immediately.
    """
    if _opposes(operator_cmd, assist_cmd, cfg):
        return limits.clamp(operator_cmd)
    margin = (confidence - cfg.threshold) / (1.0 - cfg.threshold)
    a = cfg.blend_gain * min(max(margin, 0.0), 1.0)
    return limits.clamp(
        VelocityCommand(
            (1.0 - a) * operator_cmd.v + a * assist_cmd.v,
            (1.0 - a) * operator_cmd.omega + a * assist_cmd.omega,
        )
    )
