"""Control and monitoring surface over WebSocket.

`/state` broadcasts StateSnapshot JSON at the configured rate; `/control`
accepts ControlCommand JSON and answers each command with an ok/error
frame. The engine never waits on the network: snapshots are read from a
single-writer slot, commands go through a bounded queue applied at tick
boundaries, and a client that cannot keep up is dropped.
"""
from __future__ import annotations

import asyncio
import json
import logging
import queue
import threading
import time
from dataclasses import dataclass
from typing import Literal

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field, ValidationError

from .engine import Engine, StateSnapshot
from .errors import AnsamblError

log = logging.getLogger(__name__)

SEND_TIMEOUT_S = 1.0


# ---------------------------------------------------------------------------
# command schema
# ---------------------------------------------------------------------------

class SetMode(BaseModel):
    type: Literal["set_mode"]
    mode: Literal["live", "installation"]


class PlaceAvatars(BaseModel):
    type: Literal["place_avatars"]
    positions: list[tuple[float, float]] = Field(max_length=64)


class SelectScenarioSet(BaseModel):
    type: Literal["select_scenario_set"]
    scenario_set: str


class ArmLoop(BaseModel):
    type: Literal["arm_loop"]


class DisarmLoop(BaseModel):
    type: Literal["disarm_loop"]


class ClearLoops(BaseModel):
    type: Literal["clear_loops"]


class SetConfigValue(BaseModel):
    type: Literal["set_config"]
    path: str
    value: float | int | str | bool


COMMAND_MODELS = (SetMode, PlaceAvatars, SelectScenarioSet, ArmLoop, DisarmLoop,
                  ClearLoops, SetConfigValue)


def validate_command(doc: dict) -> dict:
    """Schema-check a raw command document; returns the normalized dict."""
    kind = doc.get("type")
    for model in COMMAND_MODELS:
        if model.model_fields["type"].annotation.__args__[0] == kind:
            return model.model_validate(doc).model_dump()
    raise ValueError(f"unknown command type '{kind}'")


# ---------------------------------------------------------------------------
# engine hosting
# ---------------------------------------------------------------------------

class SnapshotSlot:
    """Single-writer latest-value slot (attribute swap is atomic enough)."""

    def __init__(self):
        self._snapshot: StateSnapshot | None = None

    def publish(self, snapshot: StateSnapshot) -> None:
        self._snapshot = snapshot

    def latest(self) -> StateSnapshot | None:
        return self._snapshot


class CommandInbox:
    """Bounded queue of control commands applied at tick boundaries."""

    def __init__(self, maxsize: int = 256):
        self._queue: queue.Queue = queue.Queue(maxsize=maxsize)

    def submit(self, command: dict, wait: bool = True, timeout: float = 2.0) -> dict:
        event = threading.Event()
        box: dict = {}
        try:
            self._queue.put_nowait((command, event, box))
        except queue.Full:
            return {"ok": False, "error": "command queue full"}
        if not wait:
            return {"ok": True, "queued": True}
        if not event.wait(timeout):
            return {"ok": False, "error": "engine did not apply command in time"}
        return box["result"]

    def apply_pending(self, engine: Engine) -> None:
        while True:
            try:
                command, event, box = self._queue.get_nowait()
            except queue.Empty:
                return
            box["result"] = engine.apply_control(command)
            event.set()


class LiveHost:
    """Bridge-facing handle for an engine driven by `run_realtime`."""

    def __init__(self):
        self.slot = SnapshotSlot()
        self.inbox = CommandInbox()

    def submit(self, command: dict, wait: bool = True, timeout: float = 2.0) -> dict:
        return self.inbox.submit(command, wait, timeout)

    def snapshot(self) -> StateSnapshot | None:
        return self.slot.latest()

    # duck-typed hooks consumed by run_realtime
    def apply_pending(self, engine: Engine) -> None:
        self.inbox.apply_pending(engine)

    def publish(self, snapshot: StateSnapshot) -> None:
        self.slot.publish(snapshot)


class SimulationHost:
    """Runs an engine on its own thread for the bridge to talk to.

    With `virtual_clock` the loop free-runs as fast as the machine allows;
    otherwise ticks are paced to the render-block duration. Commands are
    queued (bounded) and applied at the next tick boundary.
    """

    def __init__(self, engine: Engine, virtual_clock: bool = False,
                 render_audio: bool = False, max_ticks: int | None = None,
                 script=None):
        self.engine = engine
        self.virtual_clock = virtual_clock
        self.render_audio = render_audio
        self.max_ticks = max_ticks
        self.script = script                 # optional engine.ScriptPlayer
        self.slot = SnapshotSlot()
        self.inbox = CommandInbox()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def submit(self, command: dict, wait: bool = True,
               timeout: float = 2.0) -> dict:
        """Queue a validated command; optionally wait for its tick result."""
        return self.inbox.submit(command, wait, timeout)

    def snapshot(self) -> StateSnapshot | None:
        return self.slot.latest()

    def _loop(self) -> None:
        block = self.engine.block
        sr = self.engine.config.analysis.sample_rate_hz
        deadline = block / sr
        zero = np.zeros(block)
        # snapshots serve a 20 Hz UI; building one per tick is wasted work
        snapshot_every = max(1, round(sr / block / 20.0))
        t0 = time.perf_counter()
        ticks = 0
        while not self._stop.is_set():
            if self.max_ticks is not None and ticks >= self.max_ticks:
                break
            self.inbox.apply_pending(self.engine)
            events = ()
            if self.script is not None:
                pos = self.engine._sample_pos
                events = self.script.pop_due(pos, pos + block)
            self.engine.process_block(zero, events,
                                      render_audio=self.render_audio)
            ticks += 1
            if ticks % snapshot_every == 0 or self.max_ticks == ticks:
                self.slot.publish(self.engine.snapshot())
            if not self.virtual_clock:
                target = t0 + ticks * deadline
                delay = target - time.perf_counter()
                if delay > 0:
                    time.sleep(delay)

    def start(self) -> "SimulationHost":
        self._thread = threading.Thread(target=self._loop, daemon=True,
                                        name="ansambl-sim")
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def join(self) -> None:
        if self._thread is not None:
            self._thread.join()


# ---------------------------------------------------------------------------
# the ASGI app
# ---------------------------------------------------------------------------

def build_app(host, snapshot_hz: float = 20.0) -> FastAPI:
    """FastAPI app over any host exposing snapshot() and submit()."""
    app = FastAPI(title="ansambl bridge")
    interval = 1.0 / snapshot_hz

    @app.get("/healthz")
    async def healthz():
        snap = host.snapshot()
        return {"ok": True, "tick": snap.tick if snap else None}

    @app.websocket("/state")
    async def state(ws: WebSocket):
        await ws.accept()
        last_tick = -1
        try:
            while True:
                snap = host.snapshot()
                if snap is not None and snap.tick > last_tick:
                    last_tick = snap.tick
                    payload = json.dumps(snap.to_dict(), sort_keys=True)
                    # a slow client is dropped rather than back-pressuring
                    await asyncio.wait_for(ws.send_text(payload),
                                           timeout=SEND_TIMEOUT_S)
                await asyncio.sleep(interval)
        except (WebSocketDisconnect, asyncio.TimeoutError):
            return

    @app.websocket("/control")
    async def control(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    doc = json.loads(raw)
                    command = validate_command(doc)
                except (json.JSONDecodeError, ValidationError, ValueError) as exc:
                    await ws.send_text(json.dumps(
                        {"ok": False, "error": str(exc)}, sort_keys=True))
                    continue
                result = await asyncio.to_thread(host.submit, command)
                await ws.send_text(json.dumps(result, sort_keys=True))
        except WebSocketDisconnect:
            return

    return app


@dataclass
class BridgeServer:
    server: object
    thread: threading.Thread
    host: str
    port: int

    def stop(self) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=5.0)


def serve(host, listen: str = "127.0.0.1:8765",
          snapshot_hz: float = 20.0) -> BridgeServer:
    """Run the bridge app under uvicorn on a background thread."""
    import uvicorn

    addr, _, port = listen.rpartition(":")
    app = build_app(host, snapshot_hz)
    config = uvicorn.Config(app, host=addr or "127.0.0.1", port=int(port),
                            log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True,
                              name="ansambl-bridge")
    thread.start()
    deadline = time.time() + 5.0
    while not server.started and time.time() < deadline:
        time.sleep(0.01)
    if not server.started:
        raise AnsamblError(f"bridge failed to bind {listen}")
    return BridgeServer(server, thread, addr or "127.0.0.1", int(port))
