import { describe, expect, it } from "vitest";

import { parseServerFrame, type ServerFrame } from "../src/protocol.js";
import {
  applyFrame,
  initialState,
  pendingPromptCount,
  rankedPosterior,
  recordPromptSubmission,
  setConfig,
  setConnection,
} from "../src/state.js";
import { tickFrame } from "./protocol.test.js";

const CONFIG = { threshold: 0.85, dt: 0.1, mode: "autonomous", policy: "auto_commit", fov_radius: 6, fov_halfangle: 1.05 };

function frame(seq: number, over: Record<string, unknown> = {}): ServerFrame {
  const parsed = parseServerFrame(tickFrame(seq, over));
  if (!parsed) throw new Error("bad test frame");
  return parsed;
}

describe("gap detection", () => {
  it("consecutive seqs stay fresh", () => {
    const s = initialState();
    setConnection(s, "online");
    applyFrame(s, frame(1));
    applyFrame(s, frame(2));
    expect(s.staleFrame).toBe(false);
    expect(s.gapCount).toBe(0);
  });

  it("a sequence gap flags the frame stale", () => {
    const s = initialState();
    setConnection(s, "online");
    applyFrame(s, frame(1));
    applyFrame(s, frame(3));
    expect(s.staleFrame).toBe(true);
    expect(s.gapCount).toBe(1);
    applyFrame(s, frame(4));
    expect(s.staleFrame).toBe(false); // recovered
  });

  it("event frames do not advance the tick_state sequence", () => {
    const s = initialState();
    setConnection(s, "online");
    applyFrame(s, frame(1));
    const ev = parseServerFrame(
      JSON.stringify({ session: "abc", seq: 1, kind: "event", event: { tick: 1, phase: "scan", target: null, reason: "x" } }),
    );
    applyFrame(s, ev!);
    applyFrame(s, frame(2));
    expect(s.gapCount).toBe(0);
    expect(s.events).toHaveLength(1);
  });
});

describe("prompt echo", () => {
  it("pending prompts confirm on the next prior version", () => {
    const s = initialState();
    setConnection(s, "online");
    applyFrame(s, frame(1, { prior: { objects: {}, areas: {}, version: 1 } }));
    recordPromptSubmission(s, "Bring me the red mug");
    expect(pendingPromptCount(s)).toBe(1);
    applyFrame(s, frame(2, { prior: { objects: {}, areas: {}, version: 1 } }));
    expect(pendingPromptCount(s)).toBe(1); // same version: still pending
    applyFrame(s, frame(3, { prior: { objects: {}, areas: {}, version: 2 } }));
    expect(pendingPromptCount(s)).toBe(0);
    expect(s.promptHistory[0].version).toBe(2);
  });
});

describe("ttcp tracking", () => {
  it("records the first post-scan crossing", () => {
    const s = initialState();
    setConfig(s, CONFIG);
    setConnection(s, "online");
    applyFrame(s, frame(1, { phase: "scan", top: ["obj", 0.99] }));
    expect(s.ttcpS).toBeNull(); // scan never counts
    applyFrame(s, frame(2, { phase: "inference", top: ["obj", 0.5] }));
    expect(s.ttcpS).toBeNull();
    applyFrame(s, frame(3, { phase: "inference", top: ["obj", 0.9], elapsed_s: 0.3 }));
    expect(s.ttcpS).toBeCloseTo(0.3);
    applyFrame(s, frame(4, { phase: "inference", top: ["obj", 0.95], elapsed_s: 0.4 }));
    expect(s.ttcpS).toBeCloseTo(0.3); // first crossing wins
  });

  it("requires a strict crossing", () => {
    const s = initialState();
    setConfig(s, CONFIG);
    applyFrame(s, frame(1, { phase: "inference", top: ["obj", 0.85] }));
    expect(s.ttcpS).toBeNull();
  });
});

describe("history and ranking", () => {
  it("keeps a bounded per-candidate history window", () => {
    const s = initialState();
    for (let i = 1; i <= 400; i++) {
      applyFrame(s, frame(i, { elapsed_s: i * 0.1, posterior: { a: 0.6, b: 0.4 } }));
    }
    const series = s.history.get("a")!;
    expect(series[0].t).toBeGreaterThanOrEqual(40 - 30);
    expect(series[series.length - 1].t).toBeCloseTo(40);
  });

  it("ranks the posterior by mass then id", () => {
    const s = initialState();
    applyFrame(s, frame(1, { posterior: { b: 0.4, a: 0.4, c: 0.2 } }));
    expect(rankedPosterior(s).map(([id]) => id)).toEqual(["a", "b", "c"]);
  });
});

describe("connection transitions", () => {
  it("going offline marks frames stale until fresh data arrives", () => {
    const s = initialState();
    setConnection(s, "online");
    applyFrame(s, frame(1));
    setConnection(s, "offline");
    expect(s.staleFrame).toBe(true);
    setConnection(s, "online");
    applyFrame(s, frame(2));
    expect(s.staleFrame).toBe(false);
  });
});
