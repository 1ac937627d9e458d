// Console wiring: connect to the bridge named by ?host=, paint the ring,
// route pointer drags and the mode/loop buttons.

import { AvatarController } from "./avatars";
import { BridgeClient } from "./client";
import { buildScene } from "./scene";
import { paintScene, toMetres, viewTransform } from "./ring";

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function main(): void {
  const params = new URLSearchParams(location.search);
  const host = params.get("host") ?? `${location.hostname || "127.0.0.1"}:8765`;

  const client = new BridgeClient(host);
  client.connect();
  const avatars = new AvatarController(client);

  const canvas = el<HTMLCanvasElement>("ring");
  const ctx = canvas.getContext("2d")!;
  const status = el<HTMLSpanElement>("status");

  const pointerMetres = (ev: PointerEvent): [number, number] => {
    const rect = canvas.getBoundingClientRect();
    const t = viewTransform(canvas);
    return toMetres(t, ev.clientX - rect.left, ev.clientY - rect.top);
  };
  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    avatars.pointerDown(...pointerMetres(ev));
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (ev.buttons) avatars.pointerMove(...pointerMetres(ev));
  });
  canvas.addEventListener("pointerup", (ev) => {
    avatars.pointerUp(...pointerMetres(ev));
  });

  el<HTMLButtonElement>("mode-live").onclick = () =>
    client.send({ type: "set_mode", mode: "live" });
  el<HTMLButtonElement>("mode-installation").onclick = () =>
    client.send({ type: "set_mode", mode: "installation" });
  el<HTMLButtonElement>("loop-arm").onclick = () =>
    client.send({ type: "arm_loop" });
  el<HTMLButtonElement>("loop-disarm").onclick = () =>
    client.send({ type: "disarm_loop" });
  el<HTMLButtonElement>("loop-clear").onclick = () =>
    client.send({ type: "clear_loops" });
  el<HTMLButtonElement>("avatars-clear").onclick = () => avatars.removeAll();

  const frame = () => {
    const scene = buildScene(client.latest, client.stale, performance.now() / 1000);
    paintScene(ctx, viewTransform(canvas), scene, avatars.positions);
    const lat = client.latencyEstimateMs;
    status.textContent = scene.stale
      ? `disconnected or stale (host ${host})`
      : `tick ${scene.tick} | ${scene.mode} | loop layers ${scene.loopLayers}` +
        `${scene.loopArmed ? " (armed)" : ""} | snapshot ${lat?.toFixed(0)} ms ago`;
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

window.addEventListener("load", main);
