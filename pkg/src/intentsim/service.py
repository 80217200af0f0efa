"""Live session service: one server-authoritative 10 Hz clock per session,
streaming tick state over a WebSocket and accepting operator commands,
prompt updates, and accept/reject decisions.

Wire protocol (JSON text frames):
  client -> {"kind": "command", "v": f, "omega": f}
            {"kind": "prompt", "text": s}
            {"kind": "decision", "decision": "accept"|"reject"}
            {"kind": "pause"} {"kind": "resume"} {"kind": "reset", "config": {...}?}
  server -> {"session": id, "seq": n, "kind": "tick_state", "state": {...}}
            {"session": id, "seq": n, "kind": "event", "event": {...}}
            {"session": id, "seq": n, "kind": "error", "message": s}

tick_state seq numbers are gapless per session; event frames carry the seq
of the tick they belong to. Within one tick window the latest command, the
latest prompt, and at most one decision (FIFO) are applied.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import uuid
from collections import deque
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .assistance import Phase
from .config import build_backend, bundled_scenarios, trial_config_from_dict, validate_against_scenario
from .errors import ConfigError, IntentSimError
from .ontology import Ontology
from .operators import OperatorEvent
from .session import Session
from .world import TICK_DT, VelocityCommand, load_scenario

DISCONNECT_GRACE_S = 1.0


def _build_session(raw_config: dict) -> Session:
    if "operator" in raw_config:
        raise ConfigError("service sessions take operator input live; drop the 'operator' section")
    cfg = trial_config_from_dict(dict(raw_config))
    scenario = load_scenario(cfg.scenario)
    ontology = Ontology.load(scenario.ontology_path)
    validate_against_scenario(cfg, scenario)
    backend = build_backend(cfg, ontology, scenario)
    return Session(
        scenario,
        ontology,
        belief_params=cfg.belief,
        commitment=cfg.commitment,
        noise=cfg.noise,
        sensor=cfg.sensor,
        semantic_params=cfg.semantic,
        backend=backend,
        prompt=cfg.prompt or None,
        seed=cfg.seed,
        start_area=cfg.start_area,
        limits=cfg.limits,
    )


class SessionRuntime:
    def __init__(self, sid: str, raw_config: dict, tick_interval: float):
        self.sid = sid
        self.raw_config = dict(raw_config)
        self.tick_interval = tick_interval
        self.session = _build_session(raw_config)
        self.inbound: asyncio.Queue = asyncio.Queue()
        self.pending_decisions: deque[str] = deque()
        self.clients: dict[int, asyncio.Queue] = {}
        self._client_ids = itertools.count()
        self.seq = 0
        self.paused = True  # clock runs once the first client connects
        self.closed = False
        self._last_disconnect: float | None = None
        self.task: asyncio.Task | None = None

    def start(self) -> None:
        self.task = asyncio.get_event_loop().create_task(self._run())

    async def close(self) -> None:
        self.closed = True
        if self.task is not None:
            self.task.cancel()

    # -- client bookkeeping -------------------------------------------------

    def add_client(self) -> tuple[int, asyncio.Queue]:
        cid = next(self._client_ids)
        q: asyncio.Queue = asyncio.Queue()
        self.clients[cid] = q
        self._last_disconnect = None
        self.paused = False
        return cid, q

    def drop_client(self, cid: int) -> None:
        self.clients.pop(cid, None)
        if not self.clients:
            self._last_disconnect = asyncio.get_event_loop().time()

    def control(self, msg: dict) -> None:
        """pause/resume/reset act immediately, even while the clock is paused."""
        kind = msg.get("kind")
        if kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        elif kind == "reset":
            raw = msg.get("config") or self.raw_config
            self.session = _build_session(raw)
            self.raw_config = dict(raw)
            self.pending_decisions.clear()

    # -- the clock ----------------------------------------------------------

    async def _run(self) -> None:
        loop = asyncio.get_event_loop()
        while not self.closed:
            if self.paused:
                await asyncio.sleep(self.tick_interval / 4)
                continue
            if (
                not self.clients
                and self._last_disconnect is not None
                and loop.time() - self._last_disconnect > DISCONNECT_GRACE_S
            ):
                self.paused = True
                continue
            self.step_once()
            await asyncio.sleep(self.tick_interval)

    def step_once(self) -> dict:
        """Drain the queue, advance one tick, broadcast the state."""
        cmd = None
        prompt = None
        while True:
            try:
                msg = self.inbound.get_nowait()
            except asyncio.QueueEmpty:
                break
            kind = msg.get("kind")
            if kind == "command":
                cmd = VelocityCommand(float(msg.get("v", 0.0)), float(msg.get("omega", 0.0)))
            elif kind == "prompt":
                prompt = str(msg.get("text", ""))
            elif kind == "decision":
                self.pending_decisions.append(str(msg.get("decision", "")))
        decision = self.pending_decisions.popleft() if self.pending_decisions else None
        event = OperatorEvent(cmd=cmd or VelocityCommand.zero(), prompt=prompt or None, decision=decision)

        events_before = len(self.session.events)
        line = self.session.step(event)
        self.seq += 1
        self._broadcast({"session": self.sid, "seq": self.seq, "kind": "tick_state", "state": self.tick_state(line)})
        for e in self.session.events[events_before:]:
            self._broadcast({"session": self.sid, "seq": self.seq, "kind": "event", "event": e})
        return line

    def tick_state(self, line: dict) -> dict:
        s = self.session
        suggestion = None
        if s.fsm.phase == Phase.SUGGESTED and s.fsm.committed_target is not None:
            suggestion = {
                "target": s.fsm.committed_target,
                "probability": s.belief.posterior.get(s.fsm.committed_target, 0.0),
            }
        return {
            "tick": line["tick"],
            "elapsed_s": line["tick"] * TICK_DT,
            "pose": line["pose"],
            "phase": line["phase"],
            "cmd": line["cmd"],
            "op_cmd": line["op_cmd"],
            "nav": line["nav"],
            "man": line["man"],
            "posterior": line["posterior"],
            "top": line["top"],
            "pruned": line["pruned"],
            "prior": line["sem"],
            "suggestion": suggestion,
            "target": s.fsm.committed_target,
            "tracks": [
                {
                    "id": tid,
                    "label": s.memory.tracks[tid].descriptor.label,
                    "position": list(s.memory.tracks[tid].position_estimate),
                    "confidence": s.memory.tracks[tid].smoothed_confidence,
                }
                for tid in s.memory.ids()
            ],
            "paused": self.paused,
        }

    def _broadcast(self, msg: dict) -> None:
        data = json.dumps(msg, sort_keys=True)
        for q in list(self.clients.values()):
            q.put_nowait(data)


def scenario_summary(session: Session) -> dict:
    sc = session.scenario
    return {
        "name": sc.name,
        "reach_radius": sc.reach_radius,
        "robot_start": [sc.robot_start.x, sc.robot_start.y, sc.robot_start.heading],
        "areas": [
            {"id": a.id, "name": a.name, "polygon": [list(p) for p in a.polygon], "centroid": list(a.centroid)}
            for a in sc.areas
        ],
        "objects": [
            {"id": o.id, "label": o.label, "category": o.category, "position": list(o.position)}
            for o in sc.objects
        ],
    }


def create_app(tick_interval: float = TICK_DT) -> FastAPI:
    sessions: dict[str, SessionRuntime] = {}

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        for runtime in sessions.values():
            await runtime.close()

    app = FastAPI(title="intentsim bridge", lifespan=lifespan)
    app.state.sessions = sessions

    @app.get("/scenarios")
    def list_scenarios():
        return {"scenarios": bundled_scenarios()}

    @app.post("/sessions")
    async def open_session(config: dict):
        sid = uuid.uuid4().hex[:12]
        try:
            runtime = SessionRuntime(sid, config, tick_interval)
        except IntentSimError as e:
            raise HTTPException(status_code=400, detail=str(e))
        sessions[sid] = runtime
        runtime.start()
        return {"session": sid, "tick": runtime.session.tick, "phase": runtime.session.fsm.phase.value}

    @app.get("/sessions/{sid}")
    def session_meta(sid: str):
        runtime = sessions.get(sid)
        if runtime is None:
            raise HTTPException(status_code=404, detail="no such session")
        s = runtime.session
        return {
            "session": sid,
            "tick": s.tick,
            "phase": s.fsm.phase.value,
            "paused": runtime.paused,
            "scenario": scenario_summary(s),
            "config": {
                "threshold": s.commitment.threshold,
                "dt": TICK_DT,
                "mode": s.commitment.mode,
                "policy": s.commitment.policy,
                "fov_radius": s.sensor.fov_radius,
                "fov_halfangle": s.sensor.fov_halfangle,
            },
        }

    @app.websocket("/sessions/{sid}/ws")
    async def session_ws(ws: WebSocket, sid: str):
        runtime = sessions.get(sid)
        if runtime is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        cid, outbound = runtime.add_client()

        async def pump():
            while True:
                await ws.send_text(await outbound.get())

        sender = asyncio.get_event_loop().create_task(pump())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(
                        json.dumps(
                            {"session": sid, "seq": runtime.seq, "kind": "error", "message": "malformed frame"},
                            sort_keys=True,
                        )
                    )
                    continue
                if msg.get("kind") in ("pause", "resume", "reset"):
                    try:
                        runtime.control(msg)
                    except IntentSimError as e:
                        await ws.send_text(
                            json.dumps(
                                {"session": sid, "seq": runtime.seq, "kind": "error", "message": str(e)},
                                sort_keys=True,
                            )
                        )
                else:
                    runtime.inbound.put_nowait(msg)
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            runtime.drop_client(cid)

    return app
