// Canvas painter for the ring scene.

import { Scene } from "./scene";
import { RING_RADIUS_M } from "./types";

export interface ViewTransform {
  centerX: number;
  centerY: number;
  pxPerMetre: number;
}

export function viewTransform(canvas: HTMLCanvasElement): ViewTransform {
  const margin = 40;
  const extent = RING_RADIUS_M * 1.25;
  return {
    centerX: canvas.width / 2,
    centerY: canvas.height / 2,
    pxPerMetre: (Math.min(canvas.width, canvas.height) / 2 - margin) / extent,
  };
}

export function toCanvas(t: ViewTransform, xM: number, yM: number): [number, number] {
  return [t.centerX + xM * t.pxPerMetre, t.centerY - yM * t.pxPerMetre];
}

export function toMetres(t: ViewTransform, xPx: number, yPx: number): [number, number] {
  return [(xPx - t.centerX) / t.pxPerMetre, (t.centerY - yPx) / t.pxPerMetre];
}

export function paintScene(
  ctx: CanvasRenderingContext2D,
  t: ViewTransform,
  scene: Scene,
  avatars: [number, number][],
): void {
  const canvas = ctx.canvas;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#10101a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  // the ring itself
  ctx.strokeStyle = "#2a2a3a";
  ctx.beginPath();
  ctx.arc(t.centerX, t.centerY, RING_RADIUS_M * t.pxPerMetre, 0, 2 * Math.PI);
  ctx.stroke();

  for (const g of scene.glyphs) {
    const [x, y] = toCanvas(
      t,
      RING_RADIUS_M * Math.cos(g.angleRad),
      RING_RADIUS_M * Math.sin(g.angleRad),
    );
    // proximity cue: a ring segment creeping inward as someone approaches
    if (g.proximityCue > 0) {
      ctx.strokeStyle = `rgba(120, 200, 255, ${0.15 + 0.5 * g.proximityCue})`;
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(x, y, 14 + 10 * (1 - g.proximityCue), 0, 2 * Math.PI);
      ctx.stroke();
      ctx.lineWidth = 1;
    }
    const base = g.active ? 0.35 + 0.65 * g.brightness : 0.12;
    ctx.fillStyle = g.chosen
      ? `rgba(255, 190, 90, ${base})`
      : `rgba(230, 230, 255, ${base})`;
    ctx.beginPath();
    ctx.arc(x, y, 10, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#8888aa";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(String(g.singer), x, y + 24);
  }

  ctx.fillStyle = "#d8b0ff";
  for (const [ax, ay] of avatars) {
    const [x, y] = toCanvas(t, ax, ay);
    ctx.beginPath();
    ctx.arc(x, y, 6, 0, 2 * Math.PI);
    ctx.fill();
  }

  if (scene.stale) {
    ctx.fillStyle = "rgba(255, 80, 80, 0.9)";
    ctx.font = "16px sans-serif";
    ctx.textAlign = "left";
    ctx.fillText("STALE - no live engine state", 12, 24);
  }
}
