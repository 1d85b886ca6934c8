// Headless UI state: everything the page shows, no DOM.
// The socket handler is the only writer; rendering reads snapshots.

import {
  Counts,
  ROLE_PRESENTER,
  ServerMessage,
  TOMBSTONE,
  encodeUpdate,
} from "./protocol.js";

export interface Summary {
  counts: Counts;
  total: number;
  version: bigint;
}

export interface MeterSample {
  timestampMs: number;
  counts: Counts;
  total: number;
}

export const METER_WINDOW_MS = 60_000;
// broadcasts repeat at least every keepalive interval; this much silence
// beyond that means the connection is degraded
const KEEPALIVE_EXPECTATION_MS = 2000;
const DEGRADED_SLACK_MS = 2000;

const ZERO: Counts = [0, 0, 0, 0];

function recount(entries: Map<number, number>): Counts {
  const counts: Counts = [0, 0, 0, 0];
  for (const mask of entries.values()) {
    for (let k = 0; k < 4; k++) {
      if (mask & (1 << k)) counts[k] += 1;
    }
  }
  return counts;
}

export class UiState {
  role: number;
  status: "connecting" | "joined" | "closed" = "connecting";
  myId = 0;
  myMask = 0;
  mode = 0;
  broadcastIntervalMs = 0;
  summary: Summary = { counts: ZERO, total: 0, version: 0n };
  roster: Map<number, number> | null = null;
  rosterVersion = -1n;
  needsResync = false;
  meterHistory: MeterSample[] = [];
  lastServerMessageMs = 0;
  lastError: string | null = null;

  constructor(role: number) {
    this.role = role;
  }

  get joined(): boolean {
    return this.status === "joined";
  }

  get canReact(): boolean {
    return this.joined && this.role !== ROLE_PRESENTER;
  }

  /** Flip one reaction bit; returns the UPDATE frame to send, or null when
   *  the press changes nothing (never re-sends an identical mask). */
  toggleReaction(kind: number): Uint8Array | null {
    if (!this.canReact) return null;
    const next = this.myMask ^ (1 << kind);
    if (next === this.myMask) return null;
    this.myMask = next;
    return encodeUpdate(next);
  }

  reactionActive(kind: number): boolean {
    return (this.myMask & (1 << kind)) !== 0;
  }

  /** Fold one server message in; true if the displayed summary changed.
   *  Stale versions (at or below the current one) leave the view alone. */
  applyServerMessage(msg: ServerMessage, nowMs: number): boolean {
    this.lastServerMessageMs = nowMs;
    switch (msg.type) {
      case "welcome":
        this.myId = msg.participantId;
        this.mode = msg.mode;
        this.broadcastIntervalMs = msg.broadcastIntervalMs;
        this.status = "joined";
        return false;
      case "broadcast": {
        if (msg.version <= this.summary.version) return false;
        this.summary = { counts: msg.counts, total: msg.total, version: msg.version };
        this.pushMeterSample(nowMs);
        return true;
      }
      case "fullState": {
        if (this.roster !== null && msg.version <= this.rosterVersion) return false;
        this.roster = new Map(msg.entries);
        this.rosterVersion = msg.version;
        this.needsResync = false;
        this.summary = { counts: recount(this.roster), total: this.roster.size, version: msg.version };
        this.pushMeterSample(nowMs);
        return true;
      }
      case "rosterDelta": {
        if (this.roster === null || msg.fromVersion !== this.rosterVersion) {
          if (msg.toVersion > this.summary.version) this.needsResync = true;
          return false;
        }
        for (const [id, mask] of msg.changes) {
          if (mask === TOMBSTONE) this.roster.delete(id);
          else this.roster.set(id, mask);
        }
        this.rosterVersion = msg.toVersion;
        this.summary = { counts: recount(this.roster), total: this.roster.size, version: msg.toVersion };
        this.pushMeterSample(nowMs);
        return true;
      }
      case "error":
        this.lastError = `server refused: code ${msg.code}`;
        return false;
    }
  }

  private pushMeterSample(nowMs: number): void {
    const last = this.meterHistory[this.meterHistory.length - 1];
    if (last !== undefined && nowMs <= last.timestampMs) {
      nowMs = last.timestampMs + 1; // keep timestamps strictly increasing
    }
    this.meterHistory.push({ timestampMs: nowMs, counts: this.summary.counts, total: this.summary.total });
    this.pruneHistory(nowMs);
  }

  pruneHistory(nowMs: number): void {
    const cutoff = nowMs - METER_WINDOW_MS;
    while (this.meterHistory.length > 0 && this.meterHistory[0].timestampMs < cutoff) {
      this.meterHistory.shift();
    }
  }

  /** True when the server has been silent past the keepalive expectation. */
  isDegraded(nowMs: number): boolean {
    if (!this.joined || this.lastServerMessageMs === 0) return false;
    return nowMs - this.lastServerMessageMs > KEEPALIVE_EXPECTATION_MS + DEGRADED_SLACK_MS;
  }

  /** Per-reaction peak over the meter window, for timeline annotations. */
  windowPeaks(): Counts {
    const peaks: Counts = [0, 0, 0, 0];
    for (const sample of this.meterHistory) {
      for (let k = 0; k < 4; k++) {
        peaks[k] = Math.max(peaks[k], sample.counts[k]);
      }
    }
    return peaks;
  }

  /** Bar widths as fractions of the audience size; zero total stays empty. */
  barFractions(): [number, number, number, number] {
    const denom = Math.max(this.summary.total, 1);
    return this.summary.counts.map((c) => c / denom) as [number, number, number, number];
  }
}
