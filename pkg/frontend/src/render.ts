// Rendering: world canvas plus DOM panels, driven from the latest frame only.

import type { SessionMeta } from "./protocol.js";
import type { ConsoleState } from "./state.js";
import { HISTORY_WINDOW_S, rankedPosterior } from "./state.js";

const AREA_FILL = "#1d2b3a";
const AREA_EDGE = "#3d5a76";
const ROBOT_COLOR = "#ffd166";
const FOV_COLOR = "rgba(255, 209, 102, 0.12)";
const TARGET_COLOR = "#ef476f";

interface Viewport {
  scale: number;
  ox: number;
  oy: number;
  height: number;
}

function fitViewport(meta: SessionMeta, canvas: HTMLCanvasElement): Viewport {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const area of meta.scenario.areas) {
    for (const [x, y] of area.polygon) {
      xs.push(x);
      ys.push(y);
    }
  }
  const minX = Math.min(...xs) - 0.5;
  const maxX = Math.max(...xs) + 0.5;
  const minY = Math.min(...ys) - 0.5;
  const maxY = Math.max(...ys) + 0.5;
  const scale = Math.min(canvas.width / (maxX - minX), canvas.height / (maxY - minY));
  return { scale, ox: minX, oy: minY, height: canvas.height };
}

function toPx(v: Viewport, x: number, y: number): [number, number] {
  return [(x - v.ox) * v.scale, v.height - (y - v.oy) * v.scale];
}

export function drawWorld(
  canvas: HTMLCanvasElement,
  meta: SessionMeta,
  state: ConsoleState,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const v = fitViewport(meta, canvas);
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  for (const area of meta.scenario.areas) {
    ctx.beginPath();
    area.polygon.forEach(([x, y], i) => {
      const [px, py] = toPx(v, x, y);
      i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.closePath();
    const navP = state.latest?.nav[area.id] ?? 0;
    ctx.fillStyle = AREA_FILL;
    ctx.fill();
    ctx.strokeStyle = AREA_EDGE;
    ctx.lineWidth = 1.5;
    ctx.stroke();
    const [cx, cy] = toPx(v, area.centroid[0], area.centroid[1]);
    ctx.fillStyle = "#8ab";
    ctx.font = "11px sans-serif";
    ctx.fillText(`${area.name} ${(navP * 100).toFixed(0)}%`, cx - 30, cy);
  }

  const tick = state.latest;
  const weights = tick?.posterior ?? {};
  const pruned = new Set(tick?.pruned ?? []);
  for (const obj of meta.scenario.objects) {
    const [px, py] = toPx(v, obj.position[0], obj.position[1]);
    const p = weights[obj.id] ?? 0;
    const radius = 3 + 9 * Math.sqrt(p);
    ctx.beginPath();
    ctx.arc(px, py, radius, 0, Math.PI * 2);
    if (obj.id === tick?.target) {
      ctx.fillStyle = TARGET_COLOR;
    } else if (pruned.has(obj.id)) {
      ctx.fillStyle = "#444";
    } else {
      ctx.fillStyle = `rgba(102, 204, 255, ${0.35 + 0.65 * Math.min(1, p * 3)})`;
    }
    ctx.fill();
    ctx.fillStyle = "#9db4c8";
    ctx.font = "10px sans-serif";
    ctx.fillText(obj.label, px + radius + 2, py + 3);
  }

  if (tick) {
    const [rx, ry] = toPx(v, tick.pose[0], tick.pose[1]);
    const heading = tick.pose[2];
    const cone = meta.config.fov_halfangle;
    const range = meta.config.fov_radius * v.scale;
    ctx.beginPath();
    ctx.moveTo(rx, ry);
    ctx.arc(rx, ry, range, -(heading + cone), -(heading - cone));
    ctx.closePath();
    ctx.fillStyle = FOV_COLOR;
    ctx.fill();

    ctx.save();
    ctx.translate(rx, ry);
    ctx.rotate(-heading);
    ctx.beginPath();
    ctx.moveTo(10, 0);
    ctx.lineTo(-6, 5);
    ctx.lineTo(-6, -5);
    ctx.closePath();
    ctx.fillStyle = ROBOT_COLOR;
    ctx.fill();
    ctx.restore();
  }
}

function bar(label: string, p: number, cls = ""): string {
  const pct = Math.max(0, Math.min(100, p * 100));
  return (
    `<div class="bar-row ${cls}"><span class="bar-label">${label}</span>` +
    `<span class="bar-track"><span class="bar-fill" style="width:${pct.toFixed(1)}%"></span></span>` +
    `<span class="bar-value">${(p * 100).toFixed(1)}%</span></div>`
  );
}

export function renderPanels(root: Document, state: ConsoleState, meta: SessionMeta | null): void {
  const tick = state.latest;
  const status = root.getElementById("connection");
  if (status) {
    status.textContent =
      state.connection + (state.staleFrame && state.connection === "online" ? " (stale frame)" : "");
    status.className = `status ${state.connection}${state.staleFrame ? " stale" : ""}`;
  }
  const phase = root.getElementById("phase");
  if (phase) {
    phase.textContent = tick ? tick.phase : "-";
    phase.className = `phase phase-${tick ? tick.phase : "none"}`;
  }
  const metrics = root.getElementById("metrics");
  if (metrics) {
    const parts = [
      `tick ${tick?.tick ?? 0}`,
      `elapsed ${(tick?.elapsed_s ?? 0).toFixed(1)}s`,
      state.ttcpS !== null ? `ttcp ${state.ttcpS.toFixed(1)}s` : "ttcp -",
      state.gapCount > 0 ? `gaps ${state.gapCount}` : "",
      state.droppedWhileOffline > 0 ? `dropped ${state.droppedWhileOffline} msg` : "",
    ].filter(Boolean);
    metrics.textContent = parts.join(" | ");
  }
  const navPanel = root.getElementById("nav-bars");
  if (navPanel && tick) {
    navPanel.innerHTML = Object.entries(tick.nav)
      .sort((a, b) => b[1] - a[1] || a[0].localeCompare(b[0]))
      .map(([id, p]) => bar(id, p))
      .join("");
  }
  const postPanel = root.getElementById("posterior-bars");
  if (postPanel && tick) {
    const prunedBadges = tick.pruned.map((id) => `<span class="pruned-badge">${id}</span>`).join("");
    postPanel.innerHTML =
      rankedPosterior(state)
        .map(([id, p]) => bar(labelFor(meta, id), p, id === tick.target ? "committed" : ""))
        .join("") + (tick.pruned.length ? `<div class="pruned-row">pruned: ${prunedBadges}</div>` : "");
  }
  const banner = root.getElementById("suggestion");
  if (banner) {
    if (tick?.suggestion) {
      banner.classList.remove("hidden");
      const text = root.getElementById("suggestion-text");
      if (text) {
        text.textContent =
          `Assist toward ${labelFor(meta, tick.suggestion.target)} ` +
          `(${(tick.suggestion.probability * 100).toFixed(0)}%)?`;
      }
    } else {
      banner.classList.add("hidden");
    }
  }
  const history = root.getElementById("prompt-history");
  if (history) {
    history.innerHTML = state.promptHistory
      .slice(-8)
      .map((p) => `<li class="${p.version === null ? "pending" : "confirmed"}">${p.text}</li>`)
      .join("");
  }
  const eventLog = root.getElementById("event-log");
  if (eventLog) {
    eventLog.innerHTML = state.events
      .slice(-6)
      .map((e) => `<li>t${e.tick} ${e.reason}${e.target ? ` (${e.target})` : ""}</li>`)
      .join("");
  }
  const errorBox = root.getElementById("error-box");
  if (errorBox) {
    errorBox.textContent = state.lastError ?? "";
  }
}

function labelFor(meta: SessionMeta | null, id: string): string {
  const obj = meta?.scenario.objects.find((o) => o.id === id);
  return obj ? `${obj.label} [${id}]` : id;
}

export function drawSparklines(canvas: HTMLCanvasElement, state: ConsoleState): void {
  const ctx = canvas.getContext("2d");
  if (!ctx || !state.latest) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const now = state.latest.elapsed_s;
  const ids = rankedPosterior(state).slice(0, 5);
  const palette = ["#66ccff", "#ffd166", "#ef476f", "#06d6a0", "#b39ddb"];
  ids.forEach(([id], i) => {
    const series = state.history.get(id);
    if (!series || series.length < 2) return;
    ctx.beginPath();
    series.forEach((pt, j) => {
      const x = canvas.width * (1 - (now - pt.t) / HISTORY_WINDOW_S);
      const y = canvas.height * (1 - pt.p);
      j === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
    });
    ctx.strokeStyle = palette[i % palette.length];
    ctx.lineWidth = 1.5;
    ctx.stroke();
  });
}
