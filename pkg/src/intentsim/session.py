"""One simulation session: the full per-tick pipeline on a single 10 Hz clock.

Tick order: operator/client event -> command arbitration (scan spin, teleop,
or assistance) -> base kinematics -> sensing into track memory -> semantic
scoring round -> belief update -> commitment step -> trace record. The same
pipeline backs headless trials and the live bridge service.
"""

from __future__ import annotations

import math
from dataclasses import replace

from . import rng as rng_streams
from .assistance import (
    AssistState,
    CommitmentConfig,
    Phase,
    autonomous_controller,
    commitment_step,
    shared_autonomy_blend,
)
from .belief import (
    BeliefParams,
    init_belief,
    manip_likelihood,
    nav_likelihood,
    on_prompt_update,
    reconcile_pruning,
    track_area_map,
    update,
)
from .errors import ConfigError
from .ontology import Ontology
from .operators import OperatorEvent
from .perception import NoiseModel, SensorConfig, TrackMemory, integrate, scan_policy, sense
from .semantics import SemanticParams, SemanticScorer
from .world import (
    TICK_DT,
    Limits,
    Pose,
    Scenario,
    VelocityCommand,
    distance,
    sample_point_in_polygon,
    step_kinematics,
)


class Session:
    def __init__(
        self,
        scenario: Scenario,
        ontology: Ontology,
        *,
        belief_params: BeliefParams = BeliefParams(),
        commitment: CommitmentConfig = CommitmentConfig(),
        noise: NoiseModel = NoiseModel(),
        sensor: SensorConfig = SensorConfig(),
        semantic_params: SemanticParams = SemanticParams(),
        backend=None,
        prompt: str | None = None,
        seed: int = 0,
        start_area: str | None = None,
        limits: Limits = Limits(),
    ):
        self.scenario = scenario
        self.ontology = ontology
        self.params = belief_params.validate()
        self.commitment = commitment.validate()
        self.noise = noise.validate()
        self.sensor = sensor.validate()
        self.limits = limits
        ontology.validate_labels([o.label for o in scenario.objects], where=f"scenario '{scenario.name}'")

        self._rng_perception = rng_streams.substream(seed, rng_streams.PERCEPTION)
        rng_harness = rng_streams.substream(seed, rng_streams.HARNESS)
        if start_area is not None:
            area = scenario.area_by_id(start_area)
            if area is None:
                raise ConfigError(f"start_area '{start_area}' not in scenario")
            x, y = sample_point_in_polygon(area.polygon, rng_harness)
            heading = rng_harness.uniform(-math.pi, math.pi)
            self.pose = Pose(x, y, heading)
        else:
            self.pose = scenario.robot_start

        # The semantic factor is active only when both a backend is configured
        # and the fusion exponent is positive; at gain 0 the pipeline must be
        # bit-identical to a semantics-free run, so pruning is inert too.
        self.scorer = (
            SemanticScorer(backend, ontology, scenario, semantic_params) if backend is not None else None
        )
        self.semantic_active = backend is not None and belief_params.semantic_gain > 0.0
        if prompt and self.scorer is not None:
            self.scorer.set_prompt(prompt)

        self.memory = TrackMemory()
        self.prior = None
        self.belief = init_belief(scenario, self.memory, None)
        self.fsm = AssistState(phase=Phase.SCAN)
        self.tick = 0
        self.last_cmd = VelocityCommand.zero()
        self.last_op_cmd = VelocityCommand.zero()
        self.events: list[dict] = []

    # -- helpers -----------------------------------------------------------

    def set_prompt(self, text: str) -> bool:
        if self.scorer is None:
            return False
        return self.scorer.set_prompt(text)

    def _log_event(self, tick: int, reason: str, target: str | None = None) -> dict:
        event = {"type": "event", "tick": tick, "phase": self.fsm.phase.value, "target": target, "reason": reason}
        self.events.append(event)
        return event

    def _committed_track_position(self) -> tuple[float, float] | None:
        tid = self.fsm.committed_target
        if tid is None:
            return None
        track = self.memory.tracks.get(tid)
        return track.position_estimate if track is not None else None

    def _reach_now(self) -> bool:
        tid = self.fsm.committed_target
        if tid is None:
            return False
        obj = self.scenario.object_by_id(tid)
        if obj is None:
            return False
        return distance((self.pose.x, self.pose.y), obj.position) <= self.scenario.reach_radius

    # -- the pipeline ------------------------------------------------------

    def step(self, event: OperatorEvent | None = None) -> dict:
        """Advance one tick and return the trace line."""
        self.tick += 1
        tick = self.tick
        tick_events: list[dict] = []

        if event is not None and event.prompt and self.scorer is not None:
            if self.scorer.set_prompt(event.prompt):
                tick_events.append(self._log_event(tick, "prompt_update"))

        op_cmd = event.cmd if event is not None and event.cmd is not None else VelocityCommand.zero()
        op_cmd = self.limits.clamp(op_cmd)

        # command arbitration by the phase entering this tick
        reach = False
        if self.fsm.phase == Phase.SCAN:
            cmd, done = scan_policy(self.pose, tick - 1, self.sensor)
            if done:
                self.fsm = replace(self.fsm, phase=Phase.INFERENCE, reason="scan_complete")
                tick_events.append(self._log_event(tick, "scan_complete"))
                cmd = op_cmd
        elif self.fsm.phase == Phase.ASSISTING:
            if self.fsm.reach_tick is not None:
                cmd = VelocityCommand.zero()  # grasp proxy: hold at the target
            else:
                target_pos = self._committed_track_position()
                if target_pos is None:
                    cmd = op_cmd
                else:
                    assist_cmd, _ = autonomous_controller(
                        self.pose, target_pos, self.scenario.reach_radius, self.commitment, self.limits
                    )
                    if self.commitment.mode == "autonomous":
                        cmd = assist_cmd
                    else:
                        confidence = self.belief.posterior.get(self.fsm.committed_target, 0.0)
                        cmd = shared_autonomy_blend(op_cmd, assist_cmd, confidence, self.commitment, self.limits)
        elif self.fsm.phase == Phase.REACHED:
            cmd = VelocityCommand.zero()
        else:
            cmd = op_cmd

        self.pose = step_kinematics(self.pose, cmd, TICK_DT, self.limits)
        self.last_cmd = cmd
        self.last_op_cmd = op_cmd

        detections = sense(self.scenario, self.pose, self.noise, self._rng_perception, self.sensor, self.ontology)
        self.memory = integrate(self.memory, detections, tick)
        track_areas = track_area_map(self.memory, self.scenario)

        if self.scorer is not None:
            prior = self.scorer.score_round(self.memory)
            if self.semantic_active:
                if prior.prompt_version > self.belief.prompt_version:
                    self.belief = on_prompt_update(self.belief, prior, track_areas, self.params)
                elif prior.pruned != self.belief.pruned:
                    self.belief = reconcile_pruning(self.belief, prior, track_areas, self.params)
                self.prior = prior
            else:
                self.prior = None

        # Intent evidence flows only while the base is actually driven: the
        # navigation layer gates on u_min internally; the manipulation layer
        # gets an uninformative (all-ones) map below u_min so a stationary or
        # spinning robot accumulates no geometric evidence. The executed
        # command is used: teleop ticks reflect the operator, assistance
        # ticks reflect the state feedback of the approach.
        nav_l = nav_likelihood(self.pose, cmd, self.scenario.areas, self.params)
        if abs(cmd.v) < self.params.u_min:
            man_l = {tid: 1.0 for tid in self.memory.ids()}
        else:
            man_l = manip_likelihood(self.pose, self.memory, self.params) if len(self.memory) else {}
        self.belief = update(self.belief, nav_l, man_l, self.prior, self.params, track_areas)

        if self.fsm.phase == Phase.ASSISTING:
            reach = self._reach_now() or self.fsm.reach_tick is not None
        before = self.fsm
        self.fsm = commitment_step(self.fsm, self.belief, event, self.commitment, tick, reach=reach)
        if self.fsm.phase != before.phase or self.fsm.reason != before.reason:
            target = self.fsm.committed_target or before.committed_target or before.dwell_target
            tick_events.append(self._log_event(tick, self.fsm.reason or "", target))

        line = self._trace_line(tick, cmd, op_cmd, nav_l, man_l)
        line["events"] = [e["reason"] for e in tick_events]
        return line

    def _trace_line(self, tick, cmd, op_cmd, nav_l, man_l) -> dict:
        b = self.belief
        prior = self.prior
        return {
            "type": "tick",
            "tick": tick,
            "pose": [self.pose.x, self.pose.y, self.pose.heading],
            "phase": self.fsm.phase.value,
            "cmd": [cmd.v, cmd.omega],
            "op_cmd": [op_cmd.v, op_cmd.omega],
            "nav": dict(sorted(b.nav.items())),
            "man": dict(sorted(b.man.items())),
            "posterior": dict(sorted(b.posterior.items())),
            "top": list(b.top) if b.top is not None else None,
            "pruned": sorted(b.pruned),
            "nav_l": dict(sorted(nav_l.items())),
            "man_l": dict(sorted(man_l.items())),
            "sem": (
                {
                    "objects": dict(sorted(prior.object_weights.items())),
                    "areas": dict(sorted(prior.area_weights.items())),
                    "version": prior.prompt_version,
                }
                if prior is not None
                else None
            ),
            "target": self.fsm.committed_target,
            "underflow": list(b.underflow),
        }
