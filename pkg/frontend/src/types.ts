// Wire types mirroring the bridge's JSON schemas.

export interface SingerState {
  singer: number;
  active: boolean;
  sample: string | null;
  bucket: number;
  led: "off" | "solid" | "pulse" | "chase";
  led_rate_hz: number;
}

export interface LoopSummary {
  layers: number;
  chosen_singer: number | null;
  armed: boolean;
}

export interface EngineMetrics {
  missed_deadlines: number;
  malformed_sensor_bytes: number;
  mean_block_ms: number;
}

export interface StateSnapshot {
  schema_version?: number;
  tick: number;
  mode: "live" | "installation";
  singers: SingerState[];
  loop: LoopSummary;
  metrics: EngineMetrics;
}

export type ControlCommand =
  | { type: "set_mode"; mode: "live" | "installation" }
  | { type: "place_avatars"; positions: [number, number][] }
  | { type: "arm_loop" }
  | { type: "disarm_loop" }
  | { type: "clear_loops" }
  | { type: "set_config"; path: string; value: number | string | boolean };

export interface CommandReply {
  ok: boolean;
  error?: string;
}

export const N_SINGERS = 16;
export const RING_RADIUS_M = 3.0;

export function singerAngleRad(singer: number): number {
  return (2 * Math.PI * singer) / N_SINGERS;
}

export function singerPosition(singer: number): [number, number] {
  const a = singerAngleRad(singer);
  return [RING_RADIUS_M * Math.cos(a), RING_RADIUS_M * Math.sin(a)];
}
