// Console wiring: session bootstrap, socket lifecycle, teleop loop, rendering.

import {
  commandPayload,
  decisionPayload,
  FrameStamper,
  parseServerFrame,
  pausePayload,
  promptPayload,
  resumePayload,
  wsUrl,
  type SessionMeta,
} from "./protocol.js";
import { drawSparklines, drawWorld, renderPanels } from "./render.js";
import { ConsoleSocket } from "./socket.js";
import {
  applyFrame,
  initialState,
  noteDropped,
  recordPromptSubmission,
  setConfig,
  setConnection,
} from "./state.js";
import { applyKey, CommandGate, commandFromKeys, emptyKeys, mergeGamepad } from "./teleop.js";

const params = new URLSearchParams(window.location.search);
const server = params.get("server") ?? `${window.location.protocol}//${window.location.hostname}:8008`;

const state = initialState();
let meta: SessionMeta | null = null;
let socket: ConsoleSocket | null = null;
let stamper: FrameStamper | null = null;
const keys = emptyKeys();
let gate = new CommandGate(100);
let paused = false;

async function openSession(): Promise<string> {
  const existing = params.get("session");
  if (existing) return existing;
  const resp = await fetch(`${server}/sessions`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({
      scenario: params.get("scenario") ?? "living_room",
      backend: params.get("backend") ?? "mock",
      seed: Number(params.get("seed") ?? 1),
      commitment: { policy: "require_accept", mode: params.get("mode") ?? "autonomous" },
    }),
  });
  if (!resp.ok) throw new Error(`session open failed: ${await resp.text()}`);
  return (await resp.json()).session as string;
}

async function fetchMeta(session: string): Promise<SessionMeta> {
  const resp = await fetch(`${server}/sessions/${session}`);
  if (!resp.ok) throw new Error("session metadata unavailable");
  return (await resp.json()) as SessionMeta;
}

function gamepadAxes(): { forward: number; turn: number } | null {
  const pads = navigator.getGamepads ? navigator.getGamepads() : [];
  for (const pad of pads) {
    if (pad) return { forward: -pad.axes[1], turn: pad.axes[0] };
  }
  return null;
}

function teleopTick(): void {
  if (!socket || paused) return;
  const cmd = mergeGamepad(commandFromKeys(keys), gamepadAxes());
  const out = gate.next(cmd, performance.now());
  if (out && stamper) socket.send(stamper.encode(commandPayload(out.v, out.omega)));
}

function connect(session: string): void {
  socket = new ConsoleSocket(wsUrl(server, session), {
    onFrame: (raw) => {
      const frame = parseServerFrame(raw);
      if (frame) applyFrame(state, frame);
    },
    onOpen: (dropped) => {
      setConnection(state, "online");
      if (dropped > 0) noteDropped(state, dropped);
      gate = new CommandGate(100);
    },
    onClose: () => setConnection(state, "offline"),
  });
  socket.connect();
}

function bindControls(session: string): void {
  document.addEventListener("keydown", (ev) => {
    if ((ev.target as HTMLElement | null)?.tagName === "INPUT") return;
    if (applyKey(keys, ev.key, true)) ev.preventDefault();
  });
  document.addEventListener("keyup", (ev) => {
    if ((ev.target as HTMLElement | null)?.tagName === "INPUT") return;
    if (applyKey(keys, ev.key, false)) ev.preventDefault();
  });

  const promptInput = document.getElementById("prompt-input") as HTMLInputElement | null;
  const promptSend = document.getElementById("prompt-send");
  const submit = () => {
    const text = promptInput?.value.trim() ?? "";
    if (!text || !socket || !stamper) return; // empty prompts rejected client-side
    if (socket.send(stamper.encode(promptPayload(text)))) {
      recordPromptSubmission(state, text);
      if (promptInput) promptInput.value = "";
    }
  };
  promptSend?.addEventListener("click", submit);
  promptInput?.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") submit();
  });

  document.getElementById("accept")?.addEventListener("click", () => {
    if (stamper) socket?.send(stamper.encode(decisionPayload("accept")));
  });
  document.getElementById("reject")?.addEventListener("click", () => {
    if (stamper) socket?.send(stamper.encode(decisionPayload("reject")));
  });
  const pauseBtn = document.getElementById("pause-toggle");
  pauseBtn?.addEventListener("click", () => {
    paused = !paused;
    if (stamper) socket?.send(stamper.encode(paused ? pausePayload() : resumePayload()));
    if (pauseBtn) pauseBtn.textContent = paused ? "resume" : "pause";
  });
  const link = document.getElementById("session-link") as HTMLAnchorElement | null;
  if (link) {
    const url = new URL(window.location.href);
    url.searchParams.set("session", session);
    link.href = url.toString();
    link.textContent = session;
  }
}

function renderLoop(): void {
  const world = document.getElementById("world") as HTMLCanvasElement | null;
  if (world && meta) drawWorld(world, meta, state);
  const spark = document.getElementById("sparklines") as HTMLCanvasElement | null;
  if (spark) drawSparklines(spark, state);
  renderPanels(document, state, meta);
  requestAnimationFrame(renderLoop);
}

async function start(): Promise<void> {
  try {
    const session = await openSession();
    stamper = new FrameStamper(session);
    meta = await fetchMeta(session);
    setConfig(state, meta.config);
    bindControls(session);
    connect(session);
    setInterval(teleopTick, 20); // gate enforces one command per tick window
    requestAnimationFrame(renderLoop);
  } catch (err) {
    setConnection(state, "offline");
    const box = document.getElementById("error-box");
    if (box) box.textContent = String(err);
    renderPanels(document, state, meta);
  }
}

void start();
