// Live round trip: the real UI component, a real websocket, and the real
// Python server. Toggling the clap button must put [0x02, 0x01] on the
// wire and the click must come back as a count-1 clap bar within one
// broadcast interval plus 500 ms; the presenter timeline sees the burst.

import assert from "node:assert/strict";
import { spawn, ChildProcess } from "node:child_process";
import { after, before, test } from "node:test";
import { JSDOM } from "jsdom";
import WebSocket from "ws";

import { AppHandle, SocketLike, mountApp } from "../src/app.js";
import { ROLE_AUDIENCE, ROLE_PRESENTER } from "../src/protocol.js";

const BROADCAST_INTERVAL_MS = 200;
const REPLY_BUDGET_MS = BROADCAST_INTERVAL_MS + 500;

let server: ChildProcess;
let serverPort = 0;

function startServer(): Promise<number> {
  return new Promise((resolve, reject) => {
    server = spawn("python3", [
      "-c",
      "from vaudience.cli import server_main; server_main(['--listen', '127.0.0.1:0'])",
    ]);
    const timer = setTimeout(() => reject(new Error("server did not report a port")), 10_000);
    let buffered = "";
    server.stderr!.on("data", (chunk: Buffer) => {
      buffered += chunk.toString();
      const match = buffered.match(/websocket listener on 127\.0\.0\.1:(\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    });
    server.on("exit", () => reject(new Error("server exited early")));
  });
}

before(async () => {
  serverPort = await startServer();
});

after(() => {
  server.kill();
});

interface Tap {
  frames: Uint8Array[];
}

function liveSocket(tap?: Tap): (url: string) => SocketLike {
  return (url) => {
    const socket = new WebSocket(url) as unknown as SocketLike & { send(d: Uint8Array): void };
    if (tap) {
      const rawSend = socket.send.bind(socket);
      socket.send = (data: Uint8Array) => {
        tap.frames.push(data.slice());
        rawSend(data);
      };
    }
    return socket;
  };
}

function mountLive(role: number, tap?: Tap): { app: AppHandle; dom: JSDOM } {
  const dom = new JSDOM(`<div id="app"></div>`);
  const root = dom.window.document.getElementById("app") as HTMLElement;
  const app = mountApp(root, {
    server: `127.0.0.1:${serverPort}`,
    role,
    name: role === ROLE_PRESENTER ? "host" : "fan",
    createSocket: liveSocket(tap),
  });
  return { app, dom };
}

async function until(predicate: () => boolean, budgetMs: number, what: string): Promise<number> {
  const started = Date.now();
  while (Date.now() - started < budgetMs) {
    if (predicate()) return Date.now() - started;
    await new Promise((r) => setTimeout(r, 10));
  }
  assert.fail(`timed out after ${budgetMs} ms waiting for ${what}`);
}

test("clap button round-trips through a live server", async () => {
  const tap: Tap = { frames: [] };
  const audience = mountLive(ROLE_AUDIENCE, tap);
  const presenter = mountLive(ROLE_PRESENTER);
  try {
    await until(() => audience.app.state.joined, 5000, "audience join");
    await until(() => presenter.app.state.joined, 5000, "presenter join");

    const doc = audience.dom.window.document;
    const clap = doc.querySelector("button[data-reaction=clap]") as HTMLButtonElement;
    await until(() => !clap.disabled, 2000, "buttons to enable");

    clap.click();
    const updates = () => tap.frames.filter((f) => f[0] === 0x02);
    assert.equal(updates().length, 1);
    assert.deepEqual([...updates()[0]], [0x02, 0x01]);

    const waited = await until(
      () => audience.app.state.summary.counts[0] === 1,
      REPLY_BUDGET_MS,
      "clap bar to reach 1"
    );
    assert.ok(waited <= REPLY_BUDGET_MS);
    const fill = doc.querySelector(".meter-fill[data-reaction=clap]") as HTMLElement;
    assert.equal(parseFloat(fill.style.width), 100);

    // presenter timeline records the burst...
    await until(
      () => presenter.app.state.meterHistory.some((s) => s.counts[0] === 1),
      REPLY_BUDGET_MS,
      "presenter timeline burst"
    );

    // ...and its return to zero after the button is released
    clap.click();
    assert.deepEqual([...updates()[1]], [0x02, 0x00]);
    await until(
      () => presenter.app.state.summary.counts[0] === 0,
      REPLY_BUDGET_MS,
      "clap release to propagate"
    );
    const peaks = presenter.app.state.windowPeaks();
    assert.equal(peaks[0], 1);
  } finally {
    audience.app.stop();
    presenter.app.stop();
  }
});

test("duplicate presses never re-send the same mask", async () => {
  const tap: Tap = { frames: [] };
  const audience = mountLive(ROLE_AUDIENCE, tap);
  try {
    await until(() => audience.app.state.joined, 5000, "join");
    audience.app.pressReaction(1);
    audience.app.pressReaction(1);
    audience.app.pressReaction(1);
    const masks = tap.frames.filter((f) => f[0] === 0x02).map((f) => f[1]);
    assert.deepEqual(masks, [0x02, 0x00, 0x02]); // strict alternation, no repeats
  } finally {
    audience.app.stop();
  }
});
