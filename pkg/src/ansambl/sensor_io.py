"""Proximity acquisition: serial rangefinder protocol, 1-10 bucket map,
the geometric audience simulator, and glitch smoothing.

Each of the 16 rangefinders speaks the ASCII grammar 'R' + four decimal
digits of millimetres + CR. On the wire all sensors share one aggregated
stream in which every reading is wrapped in a tagged frame:

    0xA5 | singer_id | ASCII reading | checksum

with the checksum the byte sum (mod 256) of singer_id plus the ASCII
payload. Parsers are incremental and chunking-agnostic; malformed input
is counted and skipped, resynchronizing at the next frame start.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import InvalidInputError

N_SINGERS = 16

TAG_MAGIC = 0xA5
_READING_LEN = 6  # 'R' + 4 digits + CR
_TAGGED_LEN = 1 + 1 + _READING_LEN + 1


@dataclass(frozen=True)
class QuantizerConfig:
    min_range_mm: int = 300
    max_range_mm: int = 5000

    def __post_init__(self):
        if not 0 <= self.min_range_mm < self.max_range_mm:
            raise InvalidInputError("need 0 <= min_range_mm < max_range_mm")


def quantize_mm_to_bucket(range_mm: float, config: QuantizerConfig | None = None) -> int:
    """Linear 1..10 map, 1 = nearest; input clamped to [min, max]."""
    cfg = config or QuantizerConfig()
    mm = min(max(range_mm, cfg.min_range_mm), cfg.max_range_mm)
    if mm >= cfg.max_range_mm:
        return 10
    span = cfg.max_range_mm - cfg.min_range_mm
    return 1 + int(9 * (mm - cfg.min_range_mm) / span)


@dataclass(frozen=True)
class SensorReading:
    """One quantized range; build via `make_reading` so bucket stays derived."""

    singer_id: int
    range_mm: int
    bucket: int
    timestamp: int = 0


def make_reading(singer_id: int, range_mm: float,
                 config: QuantizerConfig | None = None,
                 timestamp: int = 0) -> SensorReading:
    cfg = config or QuantizerConfig()
    mm = int(round(min(max(range_mm, cfg.min_range_mm), cfg.max_range_mm)))
    return SensorReading(singer_id, mm, quantize_mm_to_bucket(mm, cfg), timestamp)


@dataclass(frozen=True)
class SensorFrame:
    """Exactly one reading per singer, indexed by singer_id."""

    readings: tuple[SensorReading, ...]
    frame_seq: int

    def __post_init__(self):
        if len(self.readings) != N_SINGERS or any(
                r.singer_id != i for i, r in enumerate(self.readings)):
            raise InvalidInputError("frame needs one reading per singer 0..15, in order")

    def buckets(self) -> tuple[int, ...]:
        return tuple(r.bucket for r in self.readings)

    def ranges(self) -> tuple[int, ...]:
        return tuple(r.range_mm for r in self.readings)


# ---------------------------------------------------------------------------
# serial grammar
# ---------------------------------------------------------------------------

def encode_maxsonar(range_mm: int) -> bytes:
    if not 0 <= range_mm <= 9999:
        raise InvalidInputError(f"range {range_mm} outside 0..9999")
    return b"R%04d\r" % range_mm


class MaxSonarParser:
    """Incremental reading parser; tolerates arbitrary chunking.

    Bad bytes abort the current frame, bump `malformed_count` once per
    junk run, and resynchronize at the next 'R'.
    """

    def __init__(self):
        self._pending = bytearray()
        self._in_junk = False
        self.malformed_count = 0

    def push(self, chunk: bytes) -> list[int]:
        readings = []
        for byte in chunk:
            if self._pending:
                pos = len(self._pending)
                if pos < 5 and 0x30 <= byte <= 0x39:
                    self._pending.append(byte)
                elif pos == 5 and byte == 0x0D:
                    readings.append(int(self._pending[1:5]))
                    self._pending.clear()
                    self._in_junk = False
                else:
                    self.malformed_count += 1
                    self._pending.clear()
                    if byte == ord("R"):
                        self._pending.append(byte)
                        self._in_junk = False
                    else:
                        self._in_junk = True
            elif byte == ord("R"):
                self._pending.append(byte)
                self._in_junk = False
            else:
                if not self._in_junk:
                    self.malformed_count += 1
                    self._in_junk = True
        return readings


def encode_tagged(singer_id: int, range_mm: int) -> bytes:
    if not 0 <= singer_id < N_SINGERS:
        raise InvalidInputError(f"singer_id {singer_id} outside 0..15")
    payload = bytes([singer_id]) + encode_maxsonar(range_mm)
    return bytes([TAG_MAGIC]) + payload + bytes([sum(payload) & 0xFF])


class TaggedStreamParser:
    """Incremental parser for the aggregated multi-sensor stream."""

    def __init__(self):
        self._buf = bytearray()
        self.malformed_count = 0

    def push(self, chunk: bytes) -> list[tuple[int, int]]:
        self._buf.extend(chunk)
        out: list[tuple[int, int]] = []
        while True:
            start = self._buf.find(bytes([TAG_MAGIC]))
            if start < 0:
                if self._buf:
                    self.malformed_count += 1
                    self._buf.clear()
                return out
            if start > 0:
                self.malformed_count += 1
                del self._buf[:start]
            if len(self._buf) < _TAGGED_LEN:
                return out
            frame = bytes(self._buf[:_TAGGED_LEN])
            singer_id = frame[1]
            ascii_part = frame[2:-1]
            checksum = frame[-1]
            valid = (singer_id < N_SINGERS
                     and ascii_part[0] == ord("R")
                     and ascii_part[-1] == 0x0D
                     and ascii_part[1:5].isdigit()
                     and checksum == (sum(frame[1:-1]) & 0xFF))
            if valid:
                out.append((singer_id, int(ascii_part[1:5])))
                del self._buf[:_TAGGED_LEN]
            else:
                self.malformed_count += 1
                del self._buf[:1]


class FrameAssembler:
    """Collects tagged readings into complete SensorFrames.

    A frame is emitted once every singer has reported at least once since
    the previous frame; the freshest reading per singer wins.
    """

    def __init__(self, config: QuantizerConfig | None = None):
        self.config = config or QuantizerConfig()
        self._latest: dict[int, int] = {}
        self._seq = 0

    def push(self, tagged: Iterable[tuple[int, int]],
             timestamp: int = 0) -> list[SensorFrame]:
        frames = []
        for singer_id, range_mm in tagged:
            self._latest[singer_id] = range_mm
            if len(self._latest) == N_SINGERS:
                readings = tuple(
                    make_reading(i, self._latest[i], self.config, timestamp)
                    for i in range(N_SINGERS))
                frames.append(SensorFrame(readings, self._seq))
                self._seq += 1
                self._latest.clear()
        return frames


class SerialSensorSource:
    """Acquisition thread over the aggregated tagged byte stream.

    `transport` is anything with `read(n) -> bytes` (a pyserial port, a
    pipe, or a test double); latest-value semantics: a slow consumer sees
    the freshest complete frame, intermediate frames are skipped.
    """

    def __init__(self, transport, config: QuantizerConfig | None = None,
                 chunk_size: int = 64):
        import threading

        self.transport = transport
        self.parser = TaggedStreamParser()
        self.assembler = FrameAssembler(config)
        self.chunk_size = chunk_size
        self._latest: SensorFrame | None = None
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    @property
    def malformed_count(self) -> int:
        return self.parser.malformed_count

    def latest(self) -> SensorFrame | None:
        return self._latest

    def poll_once(self) -> None:
        chunk = self.transport.read(self.chunk_size)
        if not chunk:
            return
        for frame in self.assembler.push(self.parser.push(chunk)):
            self._latest = frame

    def _loop(self) -> None:
        while not self._stop.is_set():
            self.poll_once()

    def start(self) -> "SerialSensorSource":
        import threading

        self._thread = threading.Thread(target=self._loop, daemon=True,
                                        name="ansambl-sensors")
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)


def open_serial_source(port: str, config: QuantizerConfig | None = None,
                       baudrate: int = 57600) -> SerialSensorSource:
    """Open a real serial port (requires the optional pyserial package)."""
    try:
        import serial
    except ImportError as exc:
        raise InvalidInputError(
            "sensors.source is 'serial' but pyserial is not installed") from exc
    transport = serial.Serial(port, baudrate=baudrate, timeout=0.05)
    return SerialSensorSource(transport, config)


# ---------------------------------------------------------------------------
# audience simulator
# ---------------------------------------------------------------------------

DEFAULT_RING_ANGLES = tuple(360.0 * i / N_SINGERS for i in range(N_SINGERS))


@dataclass
class AudienceSimState:
    """Singers on a circle; avatars are free points in the same metre space."""

    radius_m: float = 3.0
    angles_deg: tuple[float, ...] = DEFAULT_RING_ANGLES
    avatars: list[tuple[float, float]] = field(default_factory=list)
    noise_mm: float = 0.0

    def __post_init__(self):
        if self.radius_m <= 0:
            raise InvalidInputError("radius_m must be positive")
        if len(self.angles_deg) != N_SINGERS or len(set(self.angles_deg)) != N_SINGERS:
            raise InvalidInputError("need 16 distinct singer angles")

    def singer_position(self, singer_id: int) -> tuple[float, float]:
        a = math.radians(self.angles_deg[singer_id])
        return (self.radius_m * math.cos(a), self.radius_m * math.sin(a))


def simulate_sensors(sim: AudienceSimState, config: QuantizerConfig | None = None,
                     frame_seq: int = 0, timestamp: int = 0,
                     rng: np.random.Generator | None = None) -> SensorFrame:
    """Range per singer = distance to the nearest avatar; empty room = max range."""
    cfg = config or QuantizerConfig()
    readings = []
    for i in range(N_SINGERS):
        sx, sy = sim.singer_position(i)
        if sim.avatars:
            d_m = min(math.hypot(ax - sx, ay - sy) for ax, ay in sim.avatars)
            mm = d_m * 1000.0
        else:
            mm = float(cfg.max_range_mm)
        if sim.noise_mm > 0.0 and rng is not None:
            mm += float(rng.uniform(-sim.noise_mm, sim.noise_mm))
        readings.append(make_reading(i, mm, cfg, timestamp))
    return SensorFrame(tuple(readings), frame_seq)


# ---------------------------------------------------------------------------
# smoothing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothingConfig:
    median_window: int = 3
    hold_ticks: int = 2

    def __post_init__(self):
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise InvalidInputError("median_window must be odd and >= 1")
        if self.hold_ticks < 1:
            raise InvalidInputError("hold_ticks must be >= 1")


class SensorSmoother:
    """Per-singer median filter plus bucket hysteresis.

    A new bucket is emitted only once the median's bucket has disagreed
    with the held one for `hold_ticks` consecutive frames; until then the
    previously held range (and thus bucket) is repeated, which keeps the
    bucket-derived-from-range invariant intact.
    """

    def __init__(self, config: SmoothingConfig | None = None,
                 quantizer: QuantizerConfig | None = None):
        self.config = config or SmoothingConfig()
        self.quantizer = quantizer or QuantizerConfig()
        self._history: list[list[int]] = [[] for _ in range(N_SINGERS)]
        self._held: list[SensorReading | None] = [None] * N_SINGERS
        self._dissent: list[int] = [0] * N_SINGERS

    def push(self, frame: SensorFrame) -> SensorFrame:
        cfg = self.config
        out = []
        for i, r in enumerate(frame.readings):
            hist = self._history[i]
            hist.append(r.range_mm)
            if len(hist) > cfg.median_window:
                hist.pop(0)
            med = sorted(hist)[len(hist) // 2]
            candidate = make_reading(i, med, self.quantizer, r.timestamp)
            held = self._held[i]
            if held is None or candidate.bucket == held.bucket:
                self._held[i] = candidate
                self._dissent[i] = 0
            else:
                self._dissent[i] += 1
                if self._dissent[i] >= cfg.hold_ticks:
                    self._held[i] = candidate
                    self._dissent[i] = 0
            held = self._held[i]
            out.append(SensorReading(i, held.range_mm, held.bucket, r.timestamp))
        return SensorFrame(tuple(out), frame.frame_seq)


def smooth_readings(frames: Iterable[SensorFrame],
                    config: SmoothingConfig | None = None,
                    quantizer: QuantizerConfig | None = None) -> list[SensorFrame]:
    smoother = SensorSmoother(config, quantizer)
    return [smoother.push(f) for f in frames]
