// Pure snapshot -> scene mapping; the canvas painter consumes this and the
// tests assert on it directly. No engine logic lives here: glyphs only
// restate what the latest snapshot said.

import { StateSnapshot, N_SINGERS, singerAngleRad } from "./types";

export interface Glyph {
  singer: number;
  angleRad: number;
  active: boolean;
  bucket: number;
  /** 0..1 pulse brightness mirroring the LED ring */
  brightness: number;
  /** 0..1 radial cue: how close the nearest visitor is (1 = touching) */
  proximityCue: number;
  chosen: boolean;
}

export interface Scene {
  glyphs: Glyph[];
  mode: string | null;
  stale: boolean;
  loopLayers: number;
  loopArmed: boolean;
  tick: number | null;
}

export function buildScene(
  snapshot: StateSnapshot | null,
  stale: boolean,
  timeS: number,
): Scene {
  const glyphs: Glyph[] = [];
  for (let i = 0; i < N_SINGERS; i++) {
    const s = snapshot?.singers[i];
    const pulsing = !!s && s.led === "pulse" && s.active;
    const phase = pulsing ? (timeS * s!.led_rate_hz) % 1 : 0;
    glyphs.push({
      singer: i,
      angleRad: singerAngleRad(i),
      active: s?.active ?? false,
      bucket: s?.bucket ?? 10,
      brightness: pulsing ? 0.5 * (1 - Math.cos(2 * Math.PI * phase)) : 0,
      proximityCue: s ? (10 - s.bucket) / 9 : 0,
      chosen: snapshot?.loop.chosen_singer === i,
    });
  }
  return {
    glyphs,
    mode: snapshot?.mode ?? null,
    stale,
    loopLayers: snapshot?.loop.layers ?? 0,
    loopArmed: snapshot?.loop.armed ?? false,
    tick: snapshot?.tick ?? null,
  };
}
