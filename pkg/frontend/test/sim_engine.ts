// A simulated engine + bridge for console tests: serves fake /state and
// /control sockets, recomputes proximity buckets from avatar positions
// with the same geometry the real sensor simulator uses, and streams
// snapshots on a timer.

import { SocketLike } from "../src/client";
import {
  ControlCommand,
  StateSnapshot,
  N_SINGERS,
  singerPosition,
} from "../src/types";

const MIN_RANGE_MM = 300;
const MAX_RANGE_MM = 5000;

export function bucketForRange(mm: number): number {
  const clamped = Math.min(Math.max(mm, MIN_RANGE_MM), MAX_RANGE_MM);
  if (clamped >= MAX_RANGE_MM) return 10;
  return 1 + Math.floor((9 * (clamped - MIN_RANGE_MM)) / (MAX_RANGE_MM - MIN_RANGE_MM));
}

class FakeSocket implements SocketLike {
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: string }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  closed = false;

  constructor(private readonly server: SimEngineServer,
              private readonly path: string) {}

  send(data: string): void {
    if (!this.closed) this.server.receive(this.path, this, data);
  }

  close(): void {
    this.closed = true;
    this.server.detach(this);
    this.onclose?.();
  }

  deliver(data: string): void {
    if (!this.closed) this.onmessage?.({ data });
  }
}

export class SimEngineServer {
  tick = 0;
  mode: "live" | "installation" = "live";
  avatars: [number, number][] = [];
  loopLayers = 0;
  loopArmed = false;
  commandsReceived: ControlCommand[] = [];
  up = true;

  private stateClients: FakeSocket[] = [];
  private allSockets: FakeSocket[] = [];
  private timer: ReturnType<typeof setInterval> | null = null;

  start(intervalMs = 25): void {
    this.timer = setInterval(() => this.broadcast(), intervalMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  /** Simulate the whole bridge going away (engine still running). */
  dropConnections(): void {
    this.up = false;
    [...this.allSockets].forEach((s) => s.close());
  }

  restore(): void {
    this.up = true;
  }

  factory = (url: string): SocketLike => {
    const path = url.endsWith("/state") ? "/state" : "/control";
    const socket = new FakeSocket(this, path);
    if (this.up) {
      queueMicrotask(() => {
        this.allSockets.push(socket);
        if (path === "/state") this.stateClients.push(socket);
        socket.onopen?.();
      });
    } else {
      queueMicrotask(() => socket.close());
    }
    return socket;
  };

  receive(path: string, socket: FakeSocket, data: string): void {
    if (path !== "/control") return;
    let reply: { ok: boolean; error?: string };
    try {
      const command = JSON.parse(data) as ControlCommand;
      this.commandsReceived.push(command);
      reply = this.apply(command);
    } catch (err) {
      reply = { ok: false, error: String(err) };
    }
    socket.deliver(JSON.stringify(reply));
  }

  detach(socket: FakeSocket): void {
    this.stateClients = this.stateClients.filter((s) => s !== socket);
    this.allSockets = this.allSockets.filter((s) => s !== socket);
  }

  private apply(command: ControlCommand): { ok: boolean; error?: string } {
    switch (command.type) {
      case "set_mode":
        this.mode = command.mode;
        return { ok: true };
      case "place_avatars":
        this.avatars = command.positions;
        return { ok: true };
      case "arm_loop":
        if (this.loopArmed) return { ok: false, error: "already armed" };
        this.loopArmed = true;
        return { ok: true };
      case "disarm_loop":
        if (!this.loopArmed) return { ok: false, error: "disarm before arm" };
        this.loopArmed = false;
        this.loopLayers += 1;
        return { ok: true };
      case "clear_loops":
        this.loopLayers = 0;
        return { ok: true };
      default:
        return { ok: true };
    }
  }

  snapshot(): StateSnapshot {
    const singers = [];
    for (let i = 0; i < N_SINGERS; i++) {
      const [sx, sy] = singerPosition(i);
      let mm = MAX_RANGE_MM;
      for (const [ax, ay] of this.avatars) {
        mm = Math.min(mm, Math.hypot(ax - sx, ay - sy) * 1000);
      }
      const bucket = bucketForRange(mm);
      singers.push({
        singer: i,
        active: false,
        sample: null,
        bucket,
        led: "off" as const,
        led_rate_hz: 0,
      });
    }
    return {
      tick: this.tick,
      mode: this.mode,
      singers,
      loop: { layers: this.loopLayers, chosen_singer: null, armed: this.loopArmed },
      metrics: { missed_deadlines: 0, malformed_sensor_bytes: 0, mean_block_ms: 0.3 },
    };
  }

  private broadcast(): void {
    this.tick += 1;
    const payload = JSON.stringify(this.snapshot());
    for (const client of this.stateClients) client.deliver(payload);
  }
}
