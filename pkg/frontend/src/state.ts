// Console view model: everything rendered comes from the latest gapless
// tick_state; the console holds no simulation truth of its own.

import type { ServerFrame, SessionConfig, TickState, TransitionEvent } from "./protocol.js";

export type Connection = "connecting" | "online" | "offline";

export interface PromptEntry {
  text: string;
  /** prior version that confirmed this prompt, null while pending */
  version: number | null;
  /** prior version visible when the prompt was submitted */
  submittedAtVersion: number;
}

export interface HistoryPoint {
  t: number;
  p: number;
}

export const HISTORY_WINDOW_S = 30;
const EVENT_LOG_LIMIT = 40;

export interface ConsoleState {
  connection: Connection;
  lastSeq: number | null;
  staleFrame: boolean;
  gapCount: number;
  latest: TickState | null;
  events: TransitionEvent[];
  promptHistory: PromptEntry[];
  ttcpS: number | null;
  config: SessionConfig | null;
  history: Map<string, HistoryPoint[]>;
  droppedWhileOffline: number;
  lastError: string | null;
  lastPriorVersion: number;
}

export function initialState(): ConsoleState {
  return {
    connection: "connecting",
    lastSeq: null,
    staleFrame: false,
    gapCount: 0,
    latest: null,
    events: [],
    promptHistory: [],
    ttcpS: null,
    config: null,
    history: new Map(),
    droppedWhileOffline: 0,
    lastError: null,
    lastPriorVersion: 0,
  };
}

export function setConfig(state: ConsoleState, config: SessionConfig): void {
  state.config = config;
}

export function setConnection(state: ConsoleState, connection: Connection): void {
  state.connection = connection;
  if (connection !== "online") {
    state.staleFrame = true; // anything rendered while offline is stale by definition
  }
}

export function noteDropped(state: ConsoleState, count: number): void {
  state.droppedWhileOffline += count;
}

export function recordPromptSubmission(state: ConsoleState, text: string): void {
  state.promptHistory.push({ text, version: null, submittedAtVersion: state.lastPriorVersion });
}

function confirmPrompts(state: ConsoleState, version: number): void {
  // server echo: a prior version newer than the one visible at submission
  // time confirms the oldest pending prompt
  for (const entry of state.promptHistory) {
    if (entry.version === null && version > entry.submittedAtVersion) {
      entry.version = version;
      break;
    }
  }
  state.lastPriorVersion = Math.max(state.lastPriorVersion, version);
}

function pushHistory(state: ConsoleState, tick: TickState): void {
  const horizon = tick.elapsed_s - HISTORY_WINDOW_S;
  for (const [id, p] of Object.entries(tick.posterior)) {
    let series = state.history.get(id);
    if (!series) {
      series = [];
      state.history.set(id, series);
    }
    series.push({ t: tick.elapsed_s, p });
    while (series.length > 0 && series[0].t < horizon) {
      series.shift();
    }
  }
}

/** Fold one server frame into the view model. */
export function applyFrame(state: ConsoleState, frame: ServerFrame): void {
  if (frame.kind === "error") {
    state.lastError = frame.message ?? "unknown server error";
    return;
  }
  if (frame.kind === "event" && frame.event) {
    state.events.push(frame.event);
    if (state.events.length > EVENT_LOG_LIMIT) {
      state.events.shift();
    }
    return;
  }
  if (frame.kind !== "tick_state" || !frame.state) return;

  if (state.lastSeq !== null && frame.seq !== state.lastSeq + 1) {
    state.staleFrame = true;
    state.gapCount += 1;
  } else if (state.connection === "online") {
    state.staleFrame = false;
  }
  state.lastSeq = frame.seq;
  state.latest = frame.state;

  const prior = frame.state.prior;
  if (prior) {
    confirmPrompts(state, prior.version);
  }
  if (
    state.ttcpS === null &&
    state.config !== null &&
    frame.state.phase !== "scan" &&
    frame.state.top !== null &&
    frame.state.top[1] > state.config.threshold
  ) {
    state.ttcpS = frame.state.elapsed_s;
  }
  pushHistory(state, frame.state);
}

/** ids ordered by posterior mass, for stable bar panels. */
export function rankedPosterior(state: ConsoleState): [string, number][] {
  if (!state.latest) return [];
  return Object.entries(state.latest.posterior).sort(
    (a, b) => b[1] - a[1] || a[0].localeCompare(b[0]),
  );
}

export function pendingPromptCount(state: ConsoleState): number {
  return state.promptHistory.filter((p) => p.version === null).length;
}
