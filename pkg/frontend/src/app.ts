// Page wiring: joins the session over a binary websocket, renders the live
// meter, reaction buttons for the audience, and the presenter timeline.
// All protocol/state logic lives in protocol.ts and ui-state.ts; this file
// only touches the DOM, so tests can drive the app with a fake socket.

import {
  ERROR_NAMES,
  REACTIONS,
  ROLE_AUDIENCE,
  ROLE_PRESENTER,
  decodeServerMessage,
  encodeHeartbeat,
  encodeJoin,
} from "./protocol.js";
import { METER_WINDOW_MS, UiState } from "./ui-state.js";

const HEARTBEAT_MS = 2000;
const BAR_COLORS = ["#e0a030", "#4f9fd0", "#c05050", "#56b060"];

export interface SocketLike {
  binaryType: string;
  send(data: Uint8Array): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: ArrayBuffer }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export interface AppOptions {
  server: string;
  role: number;
  name: string;
  createSocket: (url: string) => SocketLike;
  now?: () => number;
}

export interface AppHandle {
  state: UiState;
  pressReaction(kind: number): void;
  refresh(): void;
  stop(): void;
}

export function mountApp(root: HTMLElement, options: AppOptions): AppHandle {
  const now = options.now ?? (() => Date.now());
  const state = new UiState(options.role);
  const doc = root.ownerDocument;

  root.innerHTML = "";
  const status = el(doc, "div", "status");
  status.textContent = "connecting";
  const badge = el(doc, "div", "badge");
  badge.textContent = "connection degraded";
  badge.hidden = true;
  const errorLine = el(doc, "div", "error");
  errorLine.hidden = true;

  const buttons: HTMLButtonElement[] = [];
  const buttonRow = el(doc, "div", "buttons");
  if (options.role === ROLE_AUDIENCE) {
    REACTIONS.forEach((reaction, kind) => {
      const button = doc.createElement("button");
      button.className = "reaction";
      button.dataset.reaction = reaction;
      button.textContent = reaction;
      button.disabled = true;
      button.addEventListener("click", () => pressReaction(kind));
      buttonRow.appendChild(button);
      buttons.push(button);
    });
  }

  const meter = el(doc, "div", "meter");
  const fills: HTMLElement[] = [];
  const counts: HTMLElement[] = [];
  REACTIONS.forEach((reaction, kind) => {
    const row = el(doc, "div", "meter-row");
    const label = el(doc, "span", "meter-label");
    label.textContent = reaction;
    const track = el(doc, "div", "meter-track");
    const fill = el(doc, "div", "meter-fill");
    fill.dataset.reaction = reaction;
    fill.style.backgroundColor = BAR_COLORS[kind];
    track.appendChild(fill);
    const count = el(doc, "span", "meter-count");
    count.dataset.reaction = reaction;
    count.textContent = "0";
    row.append(label, track, count);
    meter.appendChild(row);
    fills.push(fill);
    counts.push(count);
  });
  const totalLine = el(doc, "div", "total");
  totalLine.textContent = "audience: 0";

  let canvas: HTMLCanvasElement | null = null;
  if (options.role === ROLE_PRESENTER) {
    canvas = doc.createElement("canvas");
    canvas.className = "timeline";
    canvas.width = 640;
    canvas.height = 160;
  }

  root.append(status, badge, errorLine, buttonRow, meter, totalLine);
  if (canvas !== null) root.appendChild(canvas);

  const socket = options.createSocket(`ws://${options.server}`);
  socket.binaryType = "arraybuffer";
  socket.onopen = () => {
    socket.send(encodeJoin(options.role, options.name));
  };
  socket.onmessage = (event) => {
    let msg;
    try {
      msg = decodeServerMessage(new Uint8Array(event.data));
    } catch {
      socket.close(); // undecodable frame: the stream is broken
      return;
    }
    if (msg.type === "error") {
      errorLine.textContent = ERROR_NAMES[msg.code] ?? `server error ${msg.code}`;
      errorLine.hidden = false;
    }
    state.applyServerMessage(msg, now());
    refresh();
  };
  socket.onclose = () => {
    state.status = "closed";
    refresh();
  };
  socket.onerror = () => undefined;

  const heartbeat = setInterval(() => {
    if (state.joined) socket.send(encodeHeartbeat());
  }, HEARTBEAT_MS);
  const liveness = setInterval(() => refresh(), 1000);

  function pressReaction(kind: number): void {
    const frame = state.toggleReaction(kind);
    if (frame !== null) socket.send(frame);
    refresh();
  }

  function refresh(): void {
    status.textContent = state.joined ? `joined as #${state.myId}` : state.status;
    badge.hidden = !state.isDegraded(now());
    const fractions = state.barFractions();
    REACTIONS.forEach((_, kind) => {
      fills[kind].style.width = `${(fractions[kind] * 100).toFixed(1)}%`;
      counts[kind].textContent = String(state.summary.counts[kind]);
    });
    totalLine.textContent = `audience: ${state.summary.total}`;
    buttons.forEach((button, kind) => {
      button.disabled = !state.canReact;
      button.classList.toggle("active", state.reactionActive(kind));
    });
    if (canvas !== null) drawTimeline(canvas, state, now());
  }

  refresh();
  return {
    state,
    pressReaction,
    refresh,
    stop() {
      clearInterval(heartbeat);
      clearInterval(liveness);
      socket.close();
    },
  };
}

/** Scrolling sixty-second chart, one series per reaction, peaks annotated. */
export function drawTimeline(canvas: HTMLCanvasElement, state: UiState, nowMs: number): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return; // headless DOM without canvas support
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#181818";
  ctx.fillRect(0, 0, width, height);
  state.pruneHistory(nowMs);
  const history = state.meterHistory;
  if (history.length === 0) return;
  const peaks = state.windowPeaks();
  const scale = Math.max(1, ...peaks);
  const x = (t: number) => width - ((nowMs - t) / METER_WINDOW_MS) * width;
  const y = (count: number) => height - 4 - (count / scale) * (height - 24);
  REACTIONS.forEach((reaction, kind) => {
    ctx.strokeStyle = BAR_COLORS[kind];
    ctx.lineWidth = 2;
    ctx.beginPath();
    // step chart: counts hold their value until the next broadcast
    let prev: number | null = null;
    for (const sample of history) {
      const sx = Math.max(0, x(sample.timestampMs));
      const sy = y(sample.counts[kind]);
      if (prev === null) ctx.moveTo(sx, sy);
      else {
        ctx.lineTo(sx, prev);
        ctx.lineTo(sx, sy);
      }
      prev = sy;
    }
    if (prev !== null) ctx.lineTo(width, prev);
    ctx.stroke();
    if (peaks[kind] > 0) {
      ctx.fillStyle = BAR_COLORS[kind];
      ctx.font = "10px sans-serif";
      ctx.fillText(`${reaction} peak ${peaks[kind]}`, 6, 12 + kind * 12);
    }
  });
}

function el(doc: Document, tag: string, className: string): HTMLElement {
  const node = doc.createElement(tag);
  node.className = className;
  return node;
}

/** Browser entry point: reads ?server=&role=&name= and mounts onto #app. */
export function mountFromLocation(win: Window & typeof globalThis): AppHandle {
  const params = new URLSearchParams(win.location.search);
  const server = params.get("server") ?? "127.0.0.1:8765";
  const role = params.get("role") === "presenter" ? ROLE_PRESENTER : ROLE_AUDIENCE;
  const name = params.get("name") ?? "guest";
  const root = win.document.getElementById("app");
  if (root === null) throw new Error("missing #app element");
  return mountApp(root as HTMLElement, {
    server,
    role,
    name,
    createSocket: (url) => new win.WebSocket(url) as unknown as SocketLike,
  });
}
