"""Live looping: immutable recorded layers, per-singer segment choice,
proximity-driven topology, and the per-block loop mix.

The performer owns what goes into a layer; each singer draws its own
playback segment (length first, then start, both uniform) from a seeded
generator, so the "surprise" is reproducible. When someone stands close,
the nearest singer is the chosen one and the other fifteen echo it with a
per-ring-step delay and gain decay.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidInputError, LoopMemoryError, LoopStateError
from .sensor_io import N_SINGERS, SensorFrame

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoopLayer:
    layer_id: int
    audio: np.ndarray
    sample_rate_hz: int
    record_start_tick: int

    def __post_init__(self):
        audio = np.asarray(self.audio, dtype=np.float64)
        audio.flags.writeable = False
        object.__setattr__(self, "audio", audio)
        if audio.size == 0:
            raise LoopStateError("zero-length layer")

    @property
    def duration_samples(self) -> int:
        return self.audio.size


@dataclass(frozen=True)
class SegmentConstraints:
    """Allowed segment length as a fraction of the layer."""

    min_fraction: float = 0.25
    max_fraction: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.min_fraction <= self.max_fraction <= 1.0:
            raise ConfigError("loop.constraints",
                              f"need 0 < min <= max <= 1, got "
                              f"[{self.min_fraction}, {self.max_fraction}]")


@dataclass(frozen=True)
class SegmentChoice:
    singer_id: int
    layer_id: int
    start_offset_samples: int
    length_samples: int
    chosen_seed: int | tuple[int, ...]

    def __post_init__(self):
        if self.length_samples <= 0 or self.start_offset_samples < 0:
            raise InvalidInputError("segment must have positive length inside layer")


@dataclass(frozen=True)
class LoopTopology:
    chosen_singer: int | None
    echo_delay_ms: float = 120.0
    echo_gain_decay: float = 0.8

    def __post_init__(self):
        if self.echo_delay_ms < 0:
            raise InvalidInputError("echo delay must be >= 0")
        if not 0.0 < self.echo_gain_decay <= 1.0:
            raise InvalidInputError("echo decay must lie in (0, 1]")


def ring_distance(a: int, b: int) -> int:
    d = abs(a - b) % N_SINGERS
    return min(d, N_SINGERS - d)


# ---------------------------------------------------------------------------
# recording
# ---------------------------------------------------------------------------

class LoopRecorder:
    """Arm/disarm capture of the performer input path.

    Layers accumulate without limit until the memory watermark, after
    which new layers are refused (with a warning) rather than evicted.
    """

    def __init__(self, sample_rate_hz: int, watermark_mb: float = 512.0):
        self.sample_rate_hz = sample_rate_hz
        self.watermark_bytes = int(watermark_mb * 2 ** 20)
        self.layers: list[LoopLayer] = []
        self._armed_tick: int | None = None
        self._blocks: list[np.ndarray] = []
        self._next_id = 0

    @property
    def armed(self) -> bool:
        return self._armed_tick is not None

    @property
    def stored_bytes(self) -> int:
        return sum(l.audio.nbytes for l in self.layers)

    def arm(self, tick: int) -> None:
        if self.armed:
            raise LoopStateError("already armed")
        if self.stored_bytes >= self.watermark_bytes:
            log.warning("loop store at %.0f MB watermark; refusing new layer",
                        self.watermark_bytes / 2 ** 20)
            raise LoopMemoryError("layer store watermark reached")
        self._armed_tick = tick
        self._blocks = []

    def capture(self, block: np.ndarray) -> None:
        if self.armed:
            self._blocks.append(np.array(block, dtype=np.float64))

    def disarm(self, tick: int) -> LoopLayer:
        if not self.armed:
            raise LoopStateError("disarm before arm")
        start = self._armed_tick
        self._armed_tick = None
        if not self._blocks:
            raise LoopStateError("zero-length recording")
        audio = np.concatenate(self._blocks)
        self._blocks = []
        layer = LoopLayer(self._next_id, audio, self.sample_rate_hz, start)
        self._next_id += 1
        self.layers.append(layer)
        return layer

    def clear(self) -> None:
        self.layers = []
        self._armed_tick = None
        self._blocks = []


# ---------------------------------------------------------------------------
# segment choice
# ---------------------------------------------------------------------------

def choose_segments(layer: LoopLayer, seeds: list,
                    constraints: SegmentConstraints | None = None
                    ) -> tuple[SegmentChoice, ...]:
    """One independent seeded (length, start) draw per singer."""
    constraints = constraints or SegmentConstraints()
    if len(seeds) != N_SINGERS:
        raise InvalidInputError(f"need {N_SINGERS} seeds")
    n = layer.duration_samples
    len_lo = max(1, int(np.ceil(constraints.min_fraction * n)))
    len_hi = max(len_lo, int(np.floor(constraints.max_fraction * n)))
    choices = []
    for singer_id, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        length = int(rng.integers(len_lo, len_hi + 1))
        start = int(rng.integers(0, n - length + 1))
        key = seed if isinstance(seed, int) else tuple(int(s) for s in seed)
        choices.append(SegmentChoice(singer_id, layer.layer_id, start, length, key))
    return tuple(choices)


# ---------------------------------------------------------------------------
# topology
# ---------------------------------------------------------------------------

class TopologyTracker:
    """Chosen-singer selection from proximity, with hold-tick hysteresis."""

    def __init__(self, echo_delay_ms: float = 120.0, echo_gain_decay: float = 0.8,
                 hold_ticks: int = 5):
        if hold_ticks < 1:
            raise ConfigError("loop.hold_ticks", "must be >= 1")
        self.echo_delay_ms = echo_delay_ms
        self.echo_gain_decay = echo_gain_decay
        self.hold_ticks = hold_ticks
        self._current: int | None = None
        self._candidate: int | None = None
        self._count = 0

    @staticmethod
    def instantaneous_choice(frame: SensorFrame) -> int | None:
        """Argmin of range (ties to the lowest id); None when nobody is near."""
        if all(r.bucket == 10 for r in frame.readings):
            return None
        ranges = [r.range_mm for r in frame.readings]
        return int(np.argmin(ranges))

    def update(self, frame: SensorFrame) -> LoopTopology:
        cand = self.instantaneous_choice(frame)
        if cand == self._current:
            self._candidate = None
            self._count = 0
        elif cand == self._candidate:
            self._count += 1
            if self._count >= self.hold_ticks:
                self._current = cand
                self._candidate = None
                self._count = 0
        else:
            self._candidate = cand
            self._count = 1
            if self.hold_ticks == 1:
                self._current = cand
                self._candidate = None
                self._count = 0
        return self.topology()

    def topology(self) -> LoopTopology:
        return LoopTopology(self._current, self.echo_delay_ms, self.echo_gain_decay)


# ---------------------------------------------------------------------------
# playback mix
# ---------------------------------------------------------------------------

def loop_mix_contribution(
    start_sample: int,
    block_size: int,
    layers: list[LoopLayer],
    choices_by_layer: dict[int, tuple[SegmentChoice, ...]],
    topology: LoopTopology,
    playback_start_by_layer: dict[int, int],
    sample_rate_hz: int,
) -> np.ndarray:
    """Sum of looping segment playbacks per channel for one output block.

    With a chosen singer, every channel replays the chosen segment delayed
    by ring distance and scaled by decay**distance; otherwise each channel
    loops its own segment. Playback of a layer begins at its commit sample
    position (plus the channel's echo delay).
    """
    out = np.zeros((N_SINGERS, block_size))
    delay_samples = int(round(topology.echo_delay_ms * sample_rate_hz / 1000.0))
    offsets = np.arange(block_size, dtype=np.int64)
    for layer in layers:
        choices = choices_by_layer[layer.layer_id]
        p0 = playback_start_by_layer[layer.layer_id]
        for ch in range(N_SINGERS):
            if topology.chosen_singer is None:
                choice = choices[ch]
                d = 0
            else:
                choice = choices[topology.chosen_singer]
                d = ring_distance(ch, topology.chosen_singer)
            rel = start_sample + offsets - p0 - d * delay_samples
            mask = rel >= 0
            if not mask.any():
                continue
            idx = choice.start_offset_samples + rel[mask] % choice.length_samples
            assert idx.min() >= choice.start_offset_samples
            assert idx.max() < choice.start_offset_samples + choice.length_samples
            gain = topology.echo_gain_decay ** d if topology.chosen_singer is not None else 1.0
            out[ch, mask] += layer.audio[idx] * gain
    return out
