"""The block-synchronous engine and its offline/real-time drivers.

One engine tick = one render block: consume the performer input hop(s),
poll (simulated or serial) sensors at their own rate, tick the ensemble,
apply commands to sample playback and the loop bus, and mix 16 channels.
Everything is keyed to the sample clock, so the offline renderer is
bit-reproducible and the real-time path is the same code driven by a
device loop. Control commands (mode, avatars, loop arming, hot config)
enter through a queue applied at tick boundaries.
"""
from __future__ import annotations

import json
import logging
import time
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import EngineConfig
from .ensemble import (
    Ensemble,
    Mode,
    PlayCommand,
    SetLedCommand,
    StopCommand,
)
from .errors import ConfigError, DeviceError, InvalidInputError, LoopMemoryError, LoopStateError
from .looper import (
    LoopRecorder,
    TopologyTracker,
    choose_segments,
    loop_mix_contribution,
)
from .render import N_CHANNELS, mix_block, stereo_downmix_matrix
from .sample_library import (
    PlaylistAssignment,
    VocalMatrix,
    assign_playlists,
    build_matrix,
    ingest_manifest,
    load_manifest,
)
from .sensor_io import AudienceSimState, SensorSmoother, simulate_sensors
from .vocal_analysis import AudioFrame, GateProfile, StreamAnalyzer
from .wav_io import read_mono, write_float32

log = logging.getLogger(__name__)

TRACE_SCHEMA_VERSION = 1


@dataclass
class EngineMetrics:
    missed_deadlines: int = 0
    malformed_sensor_bytes: int = 0
    blocks_rendered: int = 0
    block_time_total_s: float = 0.0
    block_time_peak_s: float = 0.0
    recent_block_times_s: deque = field(default_factory=lambda: deque(maxlen=2048))

    @property
    def mean_block_time_s(self) -> float:
        return self.block_time_total_s / self.blocks_rendered \
            if self.blocks_rendered else 0.0

    def record_block_time(self, dt: float) -> None:
        self.blocks_rendered += 1
        self.block_time_total_s += dt
        self.block_time_peak_s = max(self.block_time_peak_s, dt)
        self.recent_block_times_s.append(dt)

    def percentiles_ms(self) -> dict:
        if not self.recent_block_times_s:
            return {"p50": 0.0, "p95": 0.0}
        p50, p95 = np.percentile(list(self.recent_block_times_s), [50, 95])
        return {"p50": round(float(p50) * 1e3, 4),
                "p95": round(float(p95) * 1e3, 4)}


SNAPSHOT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class StateSnapshot:
    tick: int
    mode: str
    singers: tuple[dict, ...]
    loop: dict
    metrics: dict

    def to_dict(self) -> dict:
        return {"schema_version": SNAPSHOT_SCHEMA_VERSION,
                "tick": self.tick, "mode": self.mode,
                "singers": list(self.singers), "loop": dict(self.loop),
                "metrics": dict(self.metrics)}


@dataclass
class _Playback:
    sample_id: str
    audio: np.ndarray
    pos: int
    gains: np.ndarray


def _serialize_command(cmd) -> dict:
    if isinstance(cmd, PlayCommand):
        return {"op": "play", "singer": cmd.singer_id, "sample": cmd.sample_id,
                "gain": cmd.gain, "override": cmd.technique_override}
    if isinstance(cmd, StopCommand):
        return {"op": "stop", "singer": cmd.singer_id}
    if isinstance(cmd, SetLedCommand):
        return {"op": "led", "singer": cmd.singer_id, "pattern": cmd.pattern.value,
                "rate_hz": cmd.rate_hz}
    raise TypeError(f"unknown command {cmd!r}")


# hot-reloadable config paths and how to apply them
_HOT_CONFIG = {
    "render.master_gain": float,
    "loop.echo_gain_decay": float,
    "loop.echo_delay_ms": float,
    "sensors.sim_noise_mm": float,
}


class Engine:
    """Deterministic core; drive it with `process_block` per render block."""

    def __init__(self, config: EngineConfig, matrix: VocalMatrix,
                 playlists: PlaylistAssignment, profile: GateProfile,
                 sample_audio: dict[str, np.ndarray], sensor_source=None):
        self.config = config
        self.matrix = matrix
        self.playlists = playlists
        self.sample_audio = sample_audio
        self.sensor_source = sensor_source   # serial acquisition, else simulator
        missing = [sid for sid in matrix.samples if sid not in sample_audio]
        if missing:
            raise InvalidInputError(f"no audio loaded for samples {missing[:4]}")

        sr = config.analysis.sample_rate_hz
        self.block = config.render.block_size
        self.hop = config.analysis.hop
        self.analyzer = StreamAnalyzer(profile, config.analysis)
        self.ensemble = Ensemble(
            config.singers, matrix, playlists, config.rules, config.tiers,
            config.vocabulary, config.mode, sr, self.block, self.hop, config.seed)
        self.recorder = LoopRecorder(sr, config.loop.watermark_mb)
        self.topology = TopologyTracker(config.loop.echo_delay_ms,
                                        config.loop.echo_gain_decay,
                                        config.loop.hold_ticks)
        self.smoother = SensorSmoother(config.sensors.smoothing,
                                       config.sensors.quantizer)
        self.sim = AudienceSimState(radius_m=config.sensors.sim_radius_m,
                                    angles_deg=config.layout.angles_deg,
                                    noise_mm=config.sensors.sim_noise_mm)
        self.metrics = EngineMetrics()
        self.render_cfg = config.render

        # channel i carries singer singer_for_channel[i]; invert for dispatch
        self._channel_of_singer = {s: c for c, s
                                   in enumerate(config.layout.singer_for_channel)}
        self._playbacks: dict[int, _Playback] = {}
        self._loop_choices: dict[int, tuple] = {}
        self._loop_start: dict[int, int] = {}
        self._sensor_interval = max(1, int(round(sr / config.sensors.rate_hz)))
        self._next_sensor_at = 0
        self._frame_seq = 0
        self._jitter_rng = np.random.default_rng(
            np.random.SeedSequence([config.seed, 505]))
        self._tick = 0
        self._sample_pos = 0
        self._cue_run_hops = 0
        self._cue_refractory_until = 0
        # bounded single-producer feed for control-plane consumers; a full
        # deque drops the oldest record, which monitoring tolerates
        self.features_recent = deque(maxlen=256)
        self._topology_history: list[tuple[int, int | None]] = []
        self.trace: list[dict] = [{
            "type": "header", "schema_version": TRACE_SCHEMA_VERSION,
            "seed": config.seed, "mode": config.mode.value,
            "block_size": self.block, "sample_rate_hz": sr,
        }]

    # -- control ------------------------------------------------------------

    def apply_control(self, event: dict) -> dict:
        """Apply one validated control event at a tick boundary."""
        kind = event.get("type")
        try:
            if kind == "place_avatars":
                self.sim.avatars = [(float(x), float(y))
                                    for x, y in event["positions"]]
            elif kind == "set_mode":
                commands = self.ensemble.set_mode(Mode(event["mode"]))
                self._apply_commands(commands)
                self._trace_tick(commands, [{"type": "set_mode",
                                             "mode": event["mode"],
                                             "tick": self._tick}])
            elif kind == "arm_loop":
                self.recorder.arm(self._tick)
            elif kind == "disarm_loop":
                self._commit_layer()
            elif kind == "clear_loops":
                self.recorder.clear()
                self._loop_choices.clear()
                self._loop_start.clear()
            elif kind == "set_config":
                self._set_config_value(event["path"], event["value"])
            elif kind == "select_scenario_set":
                raise InvalidInputError("scenario sets are fixed at load time")
            else:
                raise InvalidInputError(f"unknown control '{kind}'")
        except (LoopStateError, LoopMemoryError, InvalidInputError, KeyError,
                ValueError) as exc:
            return {"ok": False, "error": str(exc)}
        return {"ok": True}

    def _set_config_value(self, path: str, value) -> None:
        if path not in _HOT_CONFIG:
            raise InvalidInputError(
                f"'{path}' is not hot-reloadable ({sorted(_HOT_CONFIG)})")
        value = _HOT_CONFIG[path](value)
        if path == "render.master_gain":
            self.render_cfg = replace(self.render_cfg, master_gain=value)
        elif path == "loop.echo_gain_decay":
            self.topology.echo_gain_decay = value
        elif path == "loop.echo_delay_ms":
            self.topology.echo_delay_ms = value
        elif path == "sensors.sim_noise_mm":
            self.sim.noise_mm = value

    def _commit_layer(self) -> None:
        layer = self.recorder.disarm(self._tick)
        seeds = [(self.config.seed, 303, layer.layer_id, singer)
                 for singer in range(N_CHANNELS)]
        self._loop_choices[layer.layer_id] = choose_segments(
            layer, seeds, self.config.loop.constraints)
        self._loop_start[layer.layer_id] = self._sample_pos
        self.trace.append({
            "type": "loop_layer", "tick": self._tick, "layer": layer.layer_id,
            "samples": layer.duration_samples,
            "choices": [{"singer": c.singer_id, "start": c.start_offset_samples,
                         "length": c.length_samples}
                        for c in self._loop_choices[layer.layer_id]],
        })

    # -- sung cue -------------------------------------------------------------

    def _check_sung_cue(self, features) -> None:
        cue = self.config.loop.sung_cue_pitch_hz
        if cue is None:
            return
        hold_hops = max(1, int(round(
            self.config.loop.sung_cue_hold_s * self.config.analysis.sample_rate_hz
            / self.hop)))
        for f in features:
            if f.is_singing and f.pitch_hz is not None and f.pitch_hz >= cue:
                self._cue_run_hops += 1
            else:
                self._cue_run_hops = 0
            if (self._cue_run_hops >= hold_hops
                    and self._tick >= self._cue_refractory_until):
                self._cue_run_hops = 0
                self._cue_refractory_until = self._tick + int(
                    2.0 * self.config.analysis.sample_rate_hz / self.block)
                try:
                    if self.recorder.armed:
                        self._commit_layer()
                    else:
                        self.recorder.arm(self._tick)
                except (LoopStateError, LoopMemoryError) as exc:
                    log.warning("sung cue ignored: %s", exc)

    # -- the block ------------------------------------------------------------

    def _apply_commands(self, commands) -> None:
        for cmd in commands:
            if isinstance(cmd, PlayCommand):
                audio = self.sample_audio[cmd.sample_id]
                gains = np.zeros(N_CHANNELS)
                gains[self._channel_of_singer[cmd.singer_id]] = cmd.gain
                self._playbacks[cmd.singer_id] = _Playback(
                    cmd.sample_id, audio, 0, gains)
            elif isinstance(cmd, StopCommand):
                self._playbacks.pop(cmd.singer_id, None)

    def _trace_tick(self, commands, events) -> None:
        if not commands and not events:
            return
        self.trace.append({
            "type": "tick", "tick": self._tick,
            "events": list(events),
            "commands": [_serialize_command(c) for c in commands],
        })

    def process_block(self, in_block: np.ndarray, control_events=(),
                      allow_starts: bool = True,
                      render_audio: bool = True) -> np.ndarray | None:
        """One tick: returns the (16, block) output, or None when audio is off."""
        control_results = [self.apply_control(ev) for ev in control_events]
        for res in control_results:
            if not res["ok"]:
                log.warning("control rejected: %s", res["error"])

        self.recorder.capture(in_block)

        features = []
        for off in range(0, self.block, self.hop):
            frame = AudioFrame(in_block[off:off + self.hop],
                               self.config.analysis.sample_rate_hz,
                               self._sample_pos + off)
            features.extend(self.analyzer.push(frame))
        self.features_recent.extend(features)
        self._check_sung_cue(features)

        frame = None
        if self._sample_pos >= self._next_sensor_at:
            self._next_sensor_at += self._sensor_interval
            if self.sensor_source is not None:
                raw = self.sensor_source.latest()
                self.metrics.malformed_sensor_bytes = \
                    self.sensor_source.malformed_count
            else:
                rng = self._jitter_rng if self.sim.noise_mm > 0 else None
                raw = simulate_sensors(self.sim, self.config.sensors.quantizer,
                                       self._frame_seq, self._tick, rng)
            self._frame_seq += 1
            if raw is not None:
                frame = self.smoother.push(raw)
                chosen = self.topology.update(frame).chosen_singer
                if (not self._topology_history
                        or self._topology_history[-1][1] != chosen):
                    self._topology_history.append((self._tick, chosen))

        result = self.ensemble.tick(features, frame, self._tick, allow_starts)
        self._apply_commands(result.commands)
        self._trace_tick(result.commands, result.events)

        out = None
        sources = []
        for singer_id in sorted(self._playbacks):
            p = self._playbacks[singer_id]
            if render_audio:
                chunk = p.audio[p.pos:p.pos + self.block]
                if chunk.size < self.block:
                    chunk = np.concatenate(
                        [chunk, np.zeros(self.block - chunk.size)])
                sources.append((p.gains, chunk))
            p.pos += self.block
        for singer_id in [s for s, p in self._playbacks.items()
                          if p.pos >= p.audio.size]:
            del self._playbacks[singer_id]

        if render_audio:
            loop_block = None
            if self.recorder.layers:
                loop_block = loop_mix_contribution(
                    self._sample_pos, self.block, self.recorder.layers,
                    self._loop_choices, self.topology.topology(),
                    self._loop_start, self.config.analysis.sample_rate_hz)
            out = mix_block(sources, loop_block, self.render_cfg)

        self._tick += 1
        self._sample_pos += self.block
        return out

    # -- snapshot ---------------------------------------------------------------

    def snapshot(self) -> StateSnapshot:
        singers = []
        for i, st in enumerate(self.ensemble.states):
            singers.append({
                "singer": i, "active": st.active, "sample": st.current_sample,
                "bucket": st.last_bucket, "led": st.led_pattern.value,
                "led_rate_hz": st.led_rate_hz,
            })
        topo = self.topology.topology()
        return StateSnapshot(
            tick=self._tick,
            mode=self.ensemble.mode.value,
            singers=tuple(singers),
            loop={"layers": len(self.recorder.layers),
                  "chosen_singer": topo.chosen_singer,
                  "armed": self.recorder.armed},
            metrics={"missed_deadlines": self.metrics.missed_deadlines,
                     "malformed_sensor_bytes": self.metrics.malformed_sensor_bytes,
                     "mean_block_ms": round(self.metrics.mean_block_time_s * 1e3, 4),
                     "block_ms_percentiles": self.metrics.percentiles_ms()},
        )

    def export_loop_session(self, wav_path: str | Path,
                            sidecar_path: str | Path) -> bool:
        """Loop-bus WAV plus a JSON sidecar of layers/choices/topology.

        Re-renders the loop contribution alone from the committed layers
        over the session so far; returns False when no layers exist.
        """
        layers = self.recorder.layers
        if not layers:
            return False
        sr = self.config.analysis.sample_rate_hz
        final_topology = self.topology.topology()
        blocks = []
        for start in range(0, self._sample_pos, self.block):
            blocks.append(loop_mix_contribution(
                start, self.block, layers, self._loop_choices, final_topology,
                self._loop_start, sr).astype(np.float32))
        write_float32(wav_path, np.concatenate(blocks, axis=1).T, sr)
        sidecar = {
            "schema_version": TRACE_SCHEMA_VERSION,
            "sample_rate_hz": sr,
            "layers": [{"layer": l.layer_id, "samples": l.duration_samples,
                        "record_start_tick": l.record_start_tick,
                        "playback_start_sample": self._loop_start[l.layer_id]}
                       for l in layers],
            "choices": {str(layer_id): [
                {"singer": c.singer_id, "start": c.start_offset_samples,
                 "length": c.length_samples} for c in choices]
                for layer_id, choices in self._loop_choices.items()},
            "topology_history": [{"tick": t, "chosen_singer": chosen}
                                 for t, chosen in self._topology_history],
            "echo_delay_ms": self.topology.echo_delay_ms,
            "echo_gain_decay": self.topology.echo_gain_decay,
        }
        Path(sidecar_path).write_text(json.dumps(sidecar, indent=2,
                                                 sort_keys=True) + "\n")
        return True


# ---------------------------------------------------------------------------
# session assembly
# ---------------------------------------------------------------------------

def prepare_session(config: EngineConfig) -> Engine:
    """Load manifest + profile + audio and build a ready engine."""
    if config.manifest_path is None:
        raise ConfigError("manifest", "config needs a sample manifest")
    samples = load_manifest(config.manifest_path)
    base = Path(config.manifest_path).parent
    if any(s.duration_s is None for s in samples):
        samples = ingest_manifest(samples, base, config.analysis)
    matrix = build_matrix(samples, config.buckets)
    playlists = assign_playlists(matrix, config.grouping)
    if config.profile_path is None:
        raise ConfigError("profile", "config needs a calibrated gate profile")
    profile = GateProfile.load(config.profile_path)
    sr = config.analysis.sample_rate_hz
    audio = {}
    for s in samples:
        x, _ = read_mono(base / s.path, target_rate=sr)
        peak = float(np.max(np.abs(x)))
        if peak > 1.0:
            x = x / peak
        audio[s.id] = x

    sensor_source = None
    if config.sensors.source == "serial":
        from .sensor_io import open_serial_source

        if config.sensors.serial_port is None:
            raise ConfigError("sensors.serial_port",
                              "required when sensors.source is 'serial'")
        sensor_source = open_serial_source(
            config.sensors.serial_port, config.sensors.quantizer).start()
    return Engine(config, matrix, playlists, profile, audio, sensor_source)


# ---------------------------------------------------------------------------
# scripts (avatars + controls on the session timeline)
# ---------------------------------------------------------------------------

class ScriptPlayer:
    """Streams a session script's events to the engine in block time."""

    def __init__(self, script: dict | None, sample_rate_hz: int):
        self.events: list[tuple[int, dict]] = []
        if script:
            for item in script.get("avatars", []):
                self.events.append((int(float(item["t"]) * sample_rate_hz),
                                    {"type": "place_avatars",
                                     "positions": item["positions"]}))
            for item in script.get("controls", []):
                event = {k: v for k, v in item.items() if k != "t"}
                self.events.append((int(float(item["t"]) * sample_rate_hz), event))
        self.events.sort(key=lambda e: e[0])
        self._i = 0

    def pop_due(self, start_sample: int, end_sample: int) -> list[dict]:
        due = []
        while self._i < len(self.events) and self.events[self._i][0] < end_sample:
            if self.events[self._i][0] >= start_sample:
                due.append(self.events[self._i][1])
            self._i += 1
        return due


def load_script(path: str | Path | None) -> dict | None:
    if path is None:
        return None
    return json.loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# offline render
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RenderResult:
    out_path: Path | None
    trace_path: Path | None
    blocks: int
    duration_s: float
    metrics: EngineMetrics
    output: np.ndarray | None = None


def write_trace(trace: list[dict], path: str | Path) -> None:
    with open(path, "w") as fh:
        for record in trace:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def render_offline(config: EngineConfig, performer_wav: str | Path,
                   script_path: str | Path | None = None,
                   out_path: str | Path | None = None,
                   trace_path: str | Path | None = None,
                   keep_output: bool = False) -> RenderResult:
    """Deterministic faster-than-real-time run of the whole pipeline."""
    engine = prepare_session(config)
    sr = config.analysis.sample_rate_hz
    block = config.render.block_size
    performer, _ = read_mono(performer_wav, target_rate=sr)
    peak = float(np.max(np.abs(performer))) if performer.size else 0.0
    if peak > 1.0:
        performer = performer / peak
    pad = (-performer.size) % block
    if pad:
        performer = np.concatenate([performer, np.zeros(pad)])
    player = ScriptPlayer(load_script(script_path), sr)

    blocks = []
    for start in range(0, performer.size, block):
        events = player.pop_due(start, start + block)
        out = engine.process_block(performer[start:start + block], events)
        blocks.append(out.astype(np.float32))
        engine.metrics.blocks_rendered += 1

    output = np.concatenate(blocks, axis=1) if blocks else np.zeros((16, 0),
                                                                    np.float32)
    if out_path is not None:
        write_float32(out_path, output.T, sr)
    if trace_path is not None:
        write_trace(engine.trace, trace_path)
    return RenderResult(
        out_path=Path(out_path) if out_path else None,
        trace_path=Path(trace_path) if trace_path else None,
        blocks=len(blocks),
        duration_s=performer.size / sr,
        metrics=engine.metrics,
        output=output if keep_output else None,
    )


# ---------------------------------------------------------------------------
# real-time path
# ---------------------------------------------------------------------------

class NullSink:
    channels = None

    def write(self, block: np.ndarray) -> None:
        pass

    def close(self) -> None:
        pass


class CaptureSink:
    """Accumulates output for offline/real-time equivalence tests."""

    def __init__(self):
        self.blocks: list[np.ndarray] = []

    def write(self, block: np.ndarray) -> None:
        self.blocks.append(block.astype(np.float32))

    def output(self) -> np.ndarray:
        return np.concatenate(self.blocks, axis=1) if self.blocks \
            else np.zeros((0, 0), np.float32)

    def close(self) -> None:
        pass


class SoundDeviceSink:
    """Real audio output; requires the optional sounddevice package."""

    def __init__(self, sample_rate_hz: int, channels: int, block_size: int,
                 device=None):
        try:
            import sounddevice as sd
        except ImportError as exc:
            raise DeviceError(
                "sounddevice is not installed; use --downmix-stereo with a "
                "null sink or install the 'sounddevice' package") from exc
        self._stream = sd.OutputStream(
            samplerate=sample_rate_hz, channels=channels, blocksize=block_size,
            dtype="float32", device=device)
        self._stream.start()

    def write(self, block: np.ndarray) -> None:
        self._stream.write(np.ascontiguousarray(block.T, dtype=np.float32))

    def close(self) -> None:
        self._stream.stop()
        self._stream.close()


@dataclass(frozen=True)
class LiveReport:
    blocks: int
    duration_s: float
    missed_deadlines: int
    mean_block_time_s: float
    peak_block_time_s: float
    deadline_s: float

    def to_dict(self) -> dict:
        return {
            "blocks": self.blocks, "duration_s": self.duration_s,
            "missed_deadlines": self.missed_deadlines,
            "mean_block_time_ms": self.mean_block_time_s * 1e3,
            "peak_block_time_ms": self.peak_block_time_s * 1e3,
            "deadline_ms": self.deadline_s * 1e3,
            "mean_fraction_of_deadline": self.mean_block_time_s / self.deadline_s,
        }


def run_realtime(engine: Engine, input_blocks, sink, downmix_stereo: bool = False,
                 pace: bool = False, host=None) -> LiveReport:
    """Drive the engine block by block, measuring the per-block deadline.

    After a missed deadline the next tick drops sample starts (degrade
    without corrupting state). `pace=True` sleeps to wall-clock rate;
    CI measurement runs unpaced, which keeps the deadline math identical.
    A `host` (bridge.LiveHost) gets pending commands applied per tick and
    snapshots published.
    """
    cfg = engine.render_cfg
    deadline = cfg.block_deadline_s
    downmix = stereo_downmix_matrix(engine.config.layout) if downmix_stereo else None
    allow_starts = True
    blocks = 0
    t_wall = time.perf_counter()
    for block in input_blocks:
        t0 = time.perf_counter()
        if host is not None:
            host.apply_pending(engine)
        out = engine.process_block(block, allow_starts=allow_starts)
        dt = time.perf_counter() - t0
        engine.metrics.record_block_time(dt)
        missed = dt > deadline
        if missed:
            engine.metrics.missed_deadlines += 1
        allow_starts = not missed
        sink.write(downmix @ out if downmix is not None else out)
        if host is not None:
            host.publish(engine.snapshot())
        blocks += 1
        if pace:
            target = t_wall + blocks * deadline
            delay = target - time.perf_counter()
            if delay > 0:
                time.sleep(delay)
    sink.close()
    m = engine.metrics
    return LiveReport(
        blocks=blocks, duration_s=blocks * deadline,
        missed_deadlines=m.missed_deadlines,
        mean_block_time_s=m.mean_block_time_s,
        peak_block_time_s=m.block_time_peak_s,
        deadline_s=deadline,
    )


def wav_input_blocks(path: str | Path, sample_rate_hz: int, block: int,
                     duration_s: float | None = None, loop: bool = True):
    """Block iterator over a performer WAV, optionally looped to a duration."""
    x, _ = read_mono(path, target_rate=sample_rate_hz)
    peak = float(np.max(np.abs(x)))
    if peak > 1.0:
        x = x / peak
    pad = (-x.size) % block
    if pad:
        x = np.concatenate([x, np.zeros(pad)])
    total = int(duration_s * sample_rate_hz) if duration_s else x.size
    emitted = 0
    while emitted < total:
        for start in range(0, x.size, block):
            if emitted >= total:
                return
            yield x[start:start + block]
            emitted += block
        if not loop:
            return


def silence_blocks(sample_rate_hz: int, block: int, duration_s: float):
    zero = np.zeros(block)
    for _ in range(int(duration_s * sample_rate_hz) // block):
        yield zero
