import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { AvatarController, RateLimiter } from "../src/avatars";
import { BridgeClient } from "../src/client";
import { buildScene } from "../src/scene";
import { singerPosition } from "../src/types";
import { SimEngineServer, bucketForRange } from "./sim_engine";

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

let server: SimEngineServer;
let client: BridgeClient;

beforeEach(() => {
  server = new SimEngineServer();
  server.start(25);
  client = new BridgeClient("sim:0", {
    socketFactory: server.factory,
    staleAfterMs: 300,
    reconnectDelayMs: 50,
  });
  client.connect();
});

afterEach(() => {
  client.close();
  server.stop();
});

describe("console round trip", () => {
  it("drag onto a singer glyph shows bucket 1 within 200 ms", async () => {
    await sleep(60); // first snapshots arrive
    expect(client.latest?.singers[3].bucket).toBe(10);

    const controller = new AvatarController(client);
    const [sx, sy] = singerPosition(3);
    const t0 = performance.now();
    controller.pointerDown(sx + 2.0, sy); // grab empty space, then drag on
    controller.pointerMove(sx + 1.0, sy);
    controller.pointerUp(sx, sy);

    let elapsed = Infinity;
    while (performance.now() - t0 < 1000) {
      if (client.latest?.singers[3].bucket === 1) {
        elapsed = performance.now() - t0;
        break;
      }
      await sleep(10);
    }
    expect(elapsed).toBeLessThan(200);
  });

  it("release position persists", async () => {
    await sleep(60);
    const controller = new AvatarController(client);
    controller.pointerDown(1.0, 1.0);
    controller.pointerUp(1.5, 0.5);
    await sleep(60);
    expect(server.avatars).toEqual([[1.5, 0.5]]);
  });

  it("drags outside the room are clamped to its bounds", async () => {
    await sleep(60);
    const controller = new AvatarController(client, { roomHalfExtentM: 3.6 });
    controller.pointerDown(0, 0);
    controller.pointerUp(50, -50);
    await sleep(60);
    expect(server.avatars).toEqual([[3.6, -3.6]]);
  });
});

describe("thin-client behaviour on disconnect", () => {
  it("shows stale state and sends zero commands while down", async () => {
    await sleep(60);
    expect(client.stale).toBe(false);

    server.dropConnections();
    await sleep(20);
    const before = server.commandsReceived.length;
    const controller = new AvatarController(client);
    controller.pointerDown(0.5, 0.5);
    controller.pointerMove(0.6, 0.5);
    controller.pointerUp(0.7, 0.5);
    expect(client.stale).toBe(true);
    expect(buildScene(client.latest, client.stale, 0).stale).toBe(true);
    expect(server.commandsReceived.length).toBe(before);
    expect(client.send({ type: "arm_loop" })).toBe(false);

    // reconnection resumes without engine restart
    server.restore();
    await sleep(200);
    expect(client.connected).toBe(true);
    expect(client.stale).toBe(false);
    expect(client.send({ type: "arm_loop" })).toBe(true);
  });
});

describe("command throttling", () => {
  it("limits pointer moves to 20 commands per second", () => {
    let t = 0;
    const fakeNow = () => t;
    const limiter = new RateLimiter(20, fakeNow);
    let allowed = 0;
    for (let i = 0; i < 200; i++) {
      t = i * 5; // a move every 5 ms for one second
      if (limiter.allow()) allowed += 1;
    }
    expect(allowed).toBeLessThanOrEqual(20);
    expect(allowed).toBeGreaterThan(0);
  });

  it("drag streams stay under the limit end to end", async () => {
    await sleep(60);
    const before = server.commandsReceived.length;
    const controller = new AvatarController(client, {
      maxCommandsPerSecond: 20,
    });
    controller.pointerDown(0, 0);
    for (let i = 0; i < 300; i++) controller.pointerMove(i / 100, 0);
    controller.pointerUp(3, 0);
    await sleep(30);
    const sent = server.commandsReceived.length - before;
    expect(sent).toBeLessThanOrEqual(22); // 20/s window plus the forced release
  });
});

describe("scene mapping", () => {
  it("mirrors activity and led pulse into glyphs", () => {
    const snapshot = server.snapshot();
    snapshot.singers[5] = {
      ...snapshot.singers[5],
      active: true,
      led: "pulse",
      led_rate_hz: 2.0,
    };
    const scene = buildScene(snapshot, false, 0.25); // quarter period at 2 Hz
    expect(scene.glyphs[5].active).toBe(true);
    expect(scene.glyphs[5].brightness).toBeCloseTo(1.0, 5);
    expect(scene.glyphs.filter((g) => g.active)).toHaveLength(1);
    expect(scene.glyphs[0].brightness).toBe(0);
  });

  it("renders proximity as a radial cue", () => {
    server.avatars = [singerPosition(2)];
    const scene = buildScene(server.snapshot(), false, 0);
    expect(scene.glyphs[2].bucket).toBe(1);
    expect(scene.glyphs[2].proximityCue).toBe(1);
    expect(scene.glyphs[10].proximityCue).toBe(0);
  });

  it("uses only snapshot data (no local simulation)", () => {
    // identical snapshots must build identical scenes regardless of what
    // the controller did locally in between
    const snapshot = server.snapshot();
    const a = buildScene(snapshot, false, 1.0);
    const controller = new AvatarController(client);
    controller.pointerDown(0, 0);
    const b = buildScene(snapshot, false, 1.0);
    expect(b).toEqual(a);
  });
});

describe("simulated engine geometry", () => {
  it("quantizes ranges like the engine", () => {
    expect(bucketForRange(300)).toBe(1);
    expect(bucketForRange(2650)).toBe(5);
    expect(bucketForRange(5000)).toBe(10);
  });
});
