// Wire types for the bridge service: JSON text frames over one WebSocket.

export interface TrackInfo {
  id: string;
  label: string;
  position: [number, number];
  confidence: number;
}

export interface PriorInfo {
  objects: Record<string, number>;
  areas: Record<string, number>;
  version: number;
}

export interface Suggestion {
  target: string;
  probability: number;
}

export interface TickState {
  tick: number;
  elapsed_s: number;
  pose: [number, number, number];
  phase: string;
  cmd: [number, number];
  op_cmd: [number, number];
  nav: Record<string, number>;
  man: Record<string, number>;
  posterior: Record<string, number>;
  top: [string, number] | null;
  pruned: string[];
  prior: PriorInfo | null;
  suggestion: Suggestion | null;
  target: string | null;
  tracks: TrackInfo[];
  paused: boolean;
}

export interface TransitionEvent {
  tick: number;
  phase: string;
  target: string | null;
  reason: string;
}

export interface ServerFrame {
  session: string;
  seq: number;
  kind: "tick_state" | "event" | "error";
  state?: TickState;
  event?: TransitionEvent;
  message?: string;
}

export interface SessionConfig {
  threshold: number;
  dt: number;
  mode: string;
  policy: string;
  fov_radius: number;
  fov_halfangle: number;
}

export interface AreaInfo {
  id: string;
  name: string;
  polygon: [number, number][];
  centroid: [number, number];
}

export interface ObjectInfo {
  id: string;
  label: string;
  category: string;
  position: [number, number];
}

export interface SessionMeta {
  session: string;
  tick: number;
  phase: string;
  paused: boolean;
  scenario: {
    name: string;
    reach_radius: number;
    robot_start: [number, number, number];
    areas: AreaInfo[];
    objects: ObjectInfo[];
  };
  config: SessionConfig;
}

/** Parse and shape-check a server frame; null when the frame is unusable. */
export function parseServerFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const frame = data as Record<string, unknown>;
  if (typeof frame.session !== "string" || typeof frame.seq !== "number") return null;
  if (frame.kind === "tick_state") {
    const s = frame.state as Record<string, unknown> | undefined;
    if (!s || typeof s.tick !== "number" || typeof s.phase !== "string") return null;
    return frame as unknown as ServerFrame;
  }
  if (frame.kind === "event") {
    const e = frame.event as Record<string, unknown> | undefined;
    if (!e || typeof e.reason !== "string") return null;
    return frame as unknown as ServerFrame;
  }
  if (frame.kind === "error") {
    return frame as unknown as ServerFrame;
  }
  return null;
}

export interface ClientPayload {
  kind: "command" | "prompt" | "decision" | "pause" | "resume" | "reset";
  [key: string]: unknown;
}

export function commandPayload(v: number, omega: number): ClientPayload {
  return { kind: "command", v, omega };
}

export function promptPayload(text: string): ClientPayload {
  return { kind: "prompt", text };
}

export function decisionPayload(decision: "accept" | "reject"): ClientPayload {
  return { kind: "decision", decision };
}

export function pausePayload(): ClientPayload {
  return { kind: "pause" };
}

export function resumePayload(): ClientPayload {
  return { kind: "resume" };
}

/** Every outbound frame carries the session id and a monotonic sequence number. */
export class FrameStamper {
  private seq = 0;

  constructor(private session: string) {}

  encode(payload: ClientPayload): string {
    this.seq += 1;
    return JSON.stringify({ session: this.session, seq: this.seq, ...payload });
  }
}

export function wsUrl(server: string, session: string): string {
  const base = server.replace(/^http/, "ws").replace(/\/$/, "");
  return `${base}/sessions/${session}/ws`;
}
