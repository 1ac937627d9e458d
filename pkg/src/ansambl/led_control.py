"""RGBW ring patterns and the serial frame the ring controller consumes.

One aggregated frame updates all 16 rings:

    0x5A | version | 16 x (singer_id, 4*pixel_count pixel bytes) | checksum

where the checksum is the byte sum (mod 256) of everything between the
version byte and the checksum. Pattern and phase are engine-side state;
only pixel values travel on the wire. The decoder exists as a test double
for the microcontroller firmware.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math

from .errors import InvalidInputError

N_SINGERS = 16
FRAME_MAGIC = 0x5A
PROTOCOL_VERSION = 1


class LedPattern(Enum):
    OFF = "off"
    SOLID = "solid"
    PULSE = "pulse"
    CHASE = "chase"


@dataclass(frozen=True)
class LedConfig:
    pixel_count: int = 12
    update_rate_hz: float = 30.0
    base_pulse_hz: float = 0.5   # bucket 10 (far)
    max_pulse_hz: float = 4.0    # bucket 1 (near)

    def __post_init__(self):
        if self.pixel_count < 1:
            raise InvalidInputError("pixel_count must be >= 1")
        if not 0 < self.base_pulse_hz <= self.max_pulse_hz:
            raise InvalidInputError("need 0 < base_pulse_hz <= max_pulse_hz")


@dataclass(frozen=True)
class LedRingState:
    singer_id: int
    pixels: tuple[tuple[int, int, int, int], ...]
    pattern: LedPattern
    phase: float

    def __post_init__(self):
        for px in self.pixels:
            if len(px) != 4 or any(not 0 <= c <= 255 for c in px):
                raise InvalidInputError("pixel channels must be bytes")
        if not 0.0 <= self.phase < 1.0:
            raise InvalidInputError("phase must lie in [0, 1)")


def pulse_rate_hz(bucket: int, config: LedConfig | None = None) -> float:
    """Pulse rate rises linearly as the audience gets closer (lower bucket)."""
    cfg = config or LedConfig()
    b = min(max(bucket, 1), 10)
    return cfg.base_pulse_hz + (cfg.max_pulse_hz - cfg.base_pulse_hz) * (10 - b) / 9.0


def state_to_pattern(singer_id: int, active: bool, bucket: int, clock_s: float,
                     config: LedConfig | None = None) -> LedRingState:
    """Ring state mirroring the singer's activity; deterministic in the clock."""
    cfg = config or LedConfig()
    if not active:
        pixels = tuple((0, 0, 0, 0) for _ in range(cfg.pixel_count))
        return LedRingState(singer_id, pixels, LedPattern.OFF, 0.0)
    rate = pulse_rate_hz(bucket, cfg)
    phase = (clock_s * rate) % 1.0
    brightness = 0.5 * (1.0 - math.cos(2.0 * math.pi * phase))
    v = int(round(255 * brightness))
    pixels = tuple((v, v, v, v) for _ in range(cfg.pixel_count))
    return LedRingState(singer_id, pixels, LedPattern.PULSE, phase)


def encode_led_frame(states: list[LedRingState],
                     config: LedConfig | None = None) -> bytes:
    cfg = config or LedConfig()
    if len(states) != N_SINGERS:
        raise InvalidInputError(f"need {N_SINGERS} ring states")
    if sorted(s.singer_id for s in states) != list(range(N_SINGERS)):
        raise InvalidInputError("states must cover singers 0..15")
    payload = bytearray()
    for s in sorted(states, key=lambda s: s.singer_id):
        if len(s.pixels) != cfg.pixel_count:
            raise InvalidInputError(
                f"singer {s.singer_id}: expected {cfg.pixel_count} pixels")
        payload.append(s.singer_id)
        for px in s.pixels:
            payload.extend(px)
    return (bytes([FRAME_MAGIC, PROTOCOL_VERSION]) + bytes(payload)
            + bytes([sum(payload) & 0xFF]))


def led_frame_for_snapshot(snapshot, clock_s: float,
                           config: LedConfig | None = None) -> bytes:
    """Encode one serial frame from an engine StateSnapshot."""
    states = [state_to_pattern(s["singer"], s["active"], s["bucket"], clock_s,
                               config)
              for s in snapshot.singers]
    return encode_led_frame(states, config)


class LedSerialOutput:
    """Writes ring frames at the LED update rate from engine snapshots.

    `transport` needs only `write(bytes)`; a loopback double stands in for
    the ring controller in CI. Never blocks the audio path: it runs on its
    own thread off published snapshots.
    """

    def __init__(self, snapshot_fn, transport, config: LedConfig | None = None):
        import threading
        import time as _time

        self.snapshot_fn = snapshot_fn
        self.transport = transport
        self.config = config or LedConfig()
        self.frames_written = 0
        self._stop = threading.Event()
        self._time = _time
        self._thread: threading.Thread | None = None

    def write_once(self, clock_s: float) -> None:
        snapshot = self.snapshot_fn()
        if snapshot is None:
            return
        self.transport.write(led_frame_for_snapshot(snapshot, clock_s,
                                                    self.config))
        self.frames_written += 1

    def _loop(self) -> None:
        interval = 1.0 / self.config.update_rate_hz
        t0 = self._time.perf_counter()
        while not self._stop.is_set():
            self.write_once(self._time.perf_counter() - t0)
            self._time.sleep(interval)

    def start(self) -> "LedSerialOutput":
        import threading

        self._thread = threading.Thread(target=self._loop, daemon=True,
                                        name="ansambl-led")
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)


def decode_led_frame(data: bytes,
                     config: LedConfig | None = None) -> list[tuple[int, tuple]]:
    """Reference decoder (test double): returns (singer_id, pixels) per ring."""
    cfg = config or LedConfig()
    block = 1 + 4 * cfg.pixel_count
    expected = 2 + N_SINGERS * block + 1
    if len(data) != expected:
        raise InvalidInputError(f"frame length {len(data)} != {expected}")
    if data[0] != FRAME_MAGIC:
        raise InvalidInputError("bad magic byte")
    if data[1] != PROTOCOL_VERSION:
        raise InvalidInputError(f"unsupported protocol version {data[1]}")
    payload = data[2:-1]
    if data[-1] != (sum(payload) & 0xFF):
        raise InvalidInputError("checksum mismatch")
    out = []
    for i in range(N_SINGERS):
        chunk = payload[i * block:(i + 1) * block]
        singer_id = chunk[0]
        if singer_id != i:
            raise InvalidInputError(f"ring {i} carries singer id {singer_id}")
        raw = chunk[1:]
        pixels = tuple(tuple(raw[4 * p:4 * p + 4]) for p in range(cfg.pixel_count))
        out.append((singer_id, pixels))
    return out
