// Drag handling for audience avatars in engine metre space.
//
// Pointer moves are throttled to at most `maxCommandsPerSecond`
// place_avatars commands; the release position is always sent so the
// final placement persists.

import { BridgeClient } from "./client";
import { RING_RADIUS_M } from "./types";

export interface AvatarOptions {
  roomHalfExtentM?: number;
  grabRadiusM?: number;
  maxCommandsPerSecond?: number;
  now?: () => number;
}

export class RateLimiter {
  private stamps: number[] = [];

  constructor(
    private readonly maxPerSecond: number,
    private readonly now: () => number = () => performance.now(),
  ) {}

  allow(): boolean {
    const t = this.now();
    this.stamps = this.stamps.filter((s) => t - s < 1000);
    if (this.stamps.length >= this.maxPerSecond) return false;
    this.stamps.push(t);
    return true;
  }
}

export class AvatarController {
  positions: [number, number][] = [];
  private dragging: number | null = null;
  private readonly halfExtent: number;
  private readonly grabRadius: number;
  private readonly limiter: RateLimiter;

  constructor(
    private readonly client: BridgeClient,
    options: AvatarOptions = {},
  ) {
    this.halfExtent = options.roomHalfExtentM ?? RING_RADIUS_M * 1.2;
    this.grabRadius = options.grabRadiusM ?? 0.5;
    this.limiter = new RateLimiter(
      options.maxCommandsPerSecond ?? 20,
      options.now ?? (() => performance.now()),
    );
  }

  get selected(): number | null {
    return this.dragging;
  }

  clamp(x: number, y: number): [number, number] {
    const h = this.halfExtent;
    return [Math.min(Math.max(x, -h), h), Math.min(Math.max(y, -h), h)];
  }

  pointerDown(xM: number, yM: number): void {
    let nearest = -1;
    let best = this.grabRadius;
    this.positions.forEach(([ax, ay], i) => {
      const d = Math.hypot(ax - xM, ay - yM);
      if (d <= best) {
        best = d;
        nearest = i;
      }
    });
    if (nearest < 0) {
      this.positions.push(this.clamp(xM, yM));
      nearest = this.positions.length - 1;
    }
    this.dragging = nearest;
    this.push(false);
  }

  pointerMove(xM: number, yM: number): void {
    if (this.dragging === null) return;
    this.positions[this.dragging] = this.clamp(xM, yM);
    this.push(false);
  }

  pointerUp(xM: number, yM: number): void {
    if (this.dragging === null) return;
    this.positions[this.dragging] = this.clamp(xM, yM);
    this.dragging = null;
    this.push(true); // final position persists even if the throttle is hot
  }

  removeAll(): void {
    this.positions = [];
    this.dragging = null;
    this.push(true);
  }

  private push(force: boolean): void {
    if (!force && !this.limiter.allow()) return;
    this.client.send({ type: "place_avatars", positions: this.positions });
  }
}
