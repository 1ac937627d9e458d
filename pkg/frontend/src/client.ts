// Bridge connection: /state snapshots in, /control commands out.
//
// The console is a thin client: while disconnected (or when snapshots go
// quiet) it reports stale state and refuses to send commands; reconnection
// resumes without touching the engine.

import { CommandReply, ControlCommand, StateSnapshot } from "./types";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface BridgeClientOptions {
  staleAfterMs?: number;
  reconnectDelayMs?: number;
  now?: () => number;
  socketFactory?: SocketFactory;
  setTimer?: (fn: () => void, ms: number) => unknown;
}

export class BridgeClient {
  latest: StateSnapshot | null = null;
  lastSnapshotAt: number | null = null;
  commandsSent = 0;
  onSnapshot: ((snapshot: StateSnapshot) => void) | null = null;
  onReply: ((reply: CommandReply) => void) | null = null;

  private stateSocket: SocketLike | null = null;
  private controlSocket: SocketLike | null = null;
  private stateOpen = false;
  private controlOpen = false;
  private closed = false;

  private readonly staleAfterMs: number;
  private readonly reconnectDelayMs: number;
  private readonly now: () => number;
  private readonly factory: SocketFactory;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;

  constructor(readonly host: string, options: BridgeClientOptions = {}) {
    this.staleAfterMs = options.staleAfterMs ?? 1000;
    this.reconnectDelayMs = options.reconnectDelayMs ?? 1000;
    this.now = options.now ?? (() => performance.now());
    this.factory =
      options.socketFactory ??
      ((url) => new WebSocket(url) as unknown as SocketLike);
    this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
  }

  get connected(): boolean {
    return this.stateOpen && this.controlOpen;
  }

  get stale(): boolean {
    if (!this.connected || this.lastSnapshotAt === null) return true;
    return this.now() - this.lastSnapshotAt > this.staleAfterMs;
  }

  get latencyEstimateMs(): number | null {
    return this.lastSnapshotAt === null
      ? null
      : this.now() - this.lastSnapshotAt;
  }

  connect(): void {
    this.closed = false;
    this.openState();
    this.openControl();
  }

  close(): void {
    this.closed = true;
    this.stateSocket?.close();
    this.controlSocket?.close();
    this.stateOpen = this.controlOpen = false;
  }

  /** Send a command; returns false (and sends nothing) while disconnected. */
  send(command: ControlCommand): boolean {
    if (!this.controlOpen || this.controlSocket === null) return false;
    this.controlSocket.send(JSON.stringify(command));
    this.commandsSent += 1;
    return true;
  }

  private openState(): void {
    const socket = this.factory(`ws://${this.host}/state`);
    this.stateSocket = socket;
    socket.onopen = () => {
      this.stateOpen = true;
    };
    socket.onmessage = (event) => {
      const snapshot = JSON.parse(event.data) as StateSnapshot;
      this.latest = snapshot;
      this.lastSnapshotAt = this.now();
      this.onSnapshot?.(snapshot);
    };
    socket.onclose = () => {
      this.stateOpen = false;
      if (!this.closed) this.setTimer(() => this.openState(), this.reconnectDelayMs);
    };
    socket.onerror = () => socket.onclose?.();
  }

  private openControl(): void {
    const socket = this.factory(`ws://${this.host}/control`);
    this.controlSocket = socket;
    socket.onopen = () => {
      this.controlOpen = true;
    };
    socket.onmessage = (event) => {
      this.onReply?.(JSON.parse(event.data) as CommandReply);
    };
    socket.onclose = () => {
      this.controlOpen = false;
      if (!this.closed) this.setTimer(() => this.openControl(), this.reconnectDelayMs);
    };
    socket.onerror = () => socket.onclose?.();
  }
}
