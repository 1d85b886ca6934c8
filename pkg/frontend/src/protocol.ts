// Binary wire codec, little-endian, one message per websocket frame.
// Byte layouts match the server exactly; see the repository README.

export const REACTIONS = ["clap", "whistle", "boo", "laugh"] as const;
export type Reaction = (typeof REACTIONS)[number];

export const MSG_JOIN = 0x01;
export const MSG_UPDATE = 0x02;
export const MSG_HEARTBEAT = 0x03;
export const MSG_LEAVE = 0x04;
export const MSG_WELCOME = 0x81;
export const MSG_BROADCAST = 0x82;
export const MSG_ROSTER_DELTA = 0x83;
export const MSG_FULL_STATE = 0x84;
export const MSG_ERROR = 0xff;

export const ROLE_AUDIENCE = 0;
export const ROLE_PRESENTER = 1;
export const MODE_AGGREGATE = 0;
export const MODE_ROSTER = 1;
export const TOMBSTONE = 0xff;

export const ERROR_NAMES: Record<number, string> = {
  1: "session full",
  2: "name too long",
  3: "unknown participant",
  4: "presenter cannot react",
  5: "invalid mask",
  6: "protocol violation",
};

export type Counts = [number, number, number, number];

export type ServerMessage =
  | { type: "welcome"; participantId: number; broadcastIntervalMs: number; mode: number }
  | { type: "broadcast"; version: bigint; total: number; counts: Counts }
  | { type: "rosterDelta"; fromVersion: bigint; toVersion: bigint; changes: [number, number][] }
  | { type: "fullState"; version: bigint; entries: [number, number][] }
  | { type: "error"; code: number };

export class ProtocolError extends Error {}

export function encodeJoin(role: number, name: string): Uint8Array {
  const nameBytes = new TextEncoder().encode(name);
  if (nameBytes.length > 255) throw new ProtocolError("name too long for the wire");
  const out = new Uint8Array(3 + nameBytes.length);
  out[0] = MSG_JOIN;
  out[1] = role;
  out[2] = nameBytes.length;
  out.set(nameBytes, 3);
  return out;
}

export function encodeUpdate(mask: number): Uint8Array {
  if (mask < 0 || mask > 0x0f) throw new ProtocolError(`mask ${mask} outside 0..15`);
  return Uint8Array.of(MSG_UPDATE, mask);
}

export function encodeHeartbeat(): Uint8Array {
  return Uint8Array.of(MSG_HEARTBEAT);
}

export function encodeLeave(): Uint8Array {
  return Uint8Array.of(MSG_LEAVE);
}

function readPairs(view: DataView, offset: number, n: number, allowTombstone: boolean): [number, number][] {
  if (view.byteLength !== offset + n * 5) {
    throw new ProtocolError(`expected ${offset + n * 5} bytes for ${n} entries, got ${view.byteLength}`);
  }
  const pairs: [number, number][] = [];
  for (let i = 0; i < n; i++) {
    const id = view.getUint32(offset + i * 5, true);
    const mask = view.getUint8(offset + i * 5 + 4);
    if (id === 0) throw new ProtocolError("participant id 0 is reserved");
    if (mask > 0x0f && !(allowTombstone && mask === TOMBSTONE)) {
      throw new ProtocolError(`mask ${mask} outside 0..15`);
    }
    pairs.push([id, mask]);
  }
  return pairs;
}

export function decodeServerMessage(data: Uint8Array): ServerMessage {
  if (data.length === 0) throw new ProtocolError("empty frame");
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const kind = view.getUint8(0);
  switch (kind) {
    case MSG_WELCOME: {
      if (data.length !== 8) throw new ProtocolError(`welcome needs 8 bytes, got ${data.length}`);
      const mode = view.getUint8(7);
      if (mode !== MODE_AGGREGATE && mode !== MODE_ROSTER) {
        throw new ProtocolError(`unknown mode byte ${mode}`);
      }
      return {
        type: "welcome",
        participantId: view.getUint32(1, true),
        broadcastIntervalMs: view.getUint16(5, true),
        mode,
      };
    }
    case MSG_BROADCAST: {
      if (data.length !== 19) throw new ProtocolError(`broadcast needs 19 bytes, got ${data.length}`);
      const counts: Counts = [
        view.getUint16(11, true),
        view.getUint16(13, true),
        view.getUint16(15, true),
        view.getUint16(17, true),
      ];
      return { type: "broadcast", version: view.getBigUint64(1, true), total: view.getUint16(9, true), counts };
    }
    case MSG_ROSTER_DELTA: {
      if (data.length < 19) throw new ProtocolError("roster delta header needs 19 bytes");
      const n = view.getUint16(17, true);
      return {
        type: "rosterDelta",
        fromVersion: view.getBigUint64(1, true),
        toVersion: view.getBigUint64(9, true),
        changes: readPairs(view, 19, n, true),
      };
    }
    case MSG_FULL_STATE: {
      if (data.length < 11) throw new ProtocolError("full state header needs 11 bytes");
      const n = view.getUint16(9, true);
      return {
        type: "fullState",
        version: view.getBigUint64(1, true),
        entries: readPairs(view, 11, n, false),
      };
    }
    case MSG_ERROR: {
      if (data.length !== 2) throw new ProtocolError(`error needs 2 bytes, got ${data.length}`);
      return { type: "error", code: view.getUint8(1) };
    }
    default:
      throw new ProtocolError(`unknown message type 0x${kind.toString(16)}`);
  }
}
