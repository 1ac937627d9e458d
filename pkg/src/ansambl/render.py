"""16-channel mixing: ring layout, equal-power panning, block mixer.

Panning is adjacent-pair equal-power on the speaker ring: a source angle
resolves to gains cos(t*pi/2) and sin(t*pi/2) on the two bracketing
channels, so summed squared gain is always 1. The mixer is a plain linear
sum with per-channel trims, master gain, and a hard limiter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

N_CHANNELS = 16
DEFAULT_ANGLES = tuple(360.0 * i / N_CHANNELS for i in range(N_CHANNELS))


@dataclass(frozen=True)
class ChannelLayout:
    angles_deg: tuple[float, ...] = DEFAULT_ANGLES
    singer_for_channel: tuple[int, ...] = tuple(range(N_CHANNELS))

    def __post_init__(self):
        a = self.angles_deg
        if len(a) != N_CHANNELS or any(y <= x for x, y in zip(a, a[1:])):
            raise InvalidInputError("need 16 strictly increasing channel angles")
        if not 0.0 <= a[0] and a[-1] < 360.0:
            raise InvalidInputError("channel angles must lie in [0, 360)")
        if sorted(self.singer_for_channel) != list(range(N_CHANNELS)):
            raise InvalidInputError("channel->singer map must be a permutation")


@dataclass(frozen=True)
class RenderConfig:
    sample_rate_hz: int = 48_000
    block_size: int = 512
    master_gain: float = 1.0
    limiter_threshold_dbfs: float = -1.0
    channel_trims: tuple[float, ...] = (1.0,) * N_CHANNELS

    def __post_init__(self):
        b = self.block_size
        if b < 64 or b > 4096 or b & (b - 1):
            raise InvalidInputError("block_size must be a power of two in [64, 4096]")
        if len(self.channel_trims) != N_CHANNELS:
            raise InvalidInputError("need 16 channel trims")

    @property
    def limiter_amplitude(self) -> float:
        return 10.0 ** (self.limiter_threshold_dbfs / 20.0)

    @property
    def block_deadline_s(self) -> float:
        return self.block_size / self.sample_rate_hz


def pan_between(angle_deg: float, layout: ChannelLayout | None = None) -> np.ndarray:
    """Equal-power gains over the two ring channels bracketing the angle."""
    layout = layout or ChannelLayout()
    angles = layout.angles_deg
    a = angle_deg % 360.0
    gains = np.zeros(N_CHANNELS)
    lo = int(np.searchsorted(angles, a, side="right")) - 1
    if lo < 0:  # below the first speaker: wrap into the last segment
        lo = N_CHANNELS - 1
        a += 360.0
    hi = (lo + 1) % N_CHANNELS
    seg_start = angles[lo]
    seg_end = angles[hi] if hi != 0 else angles[0] + 360.0
    t = (a - seg_start) / (seg_end - seg_start)
    gains[lo] = np.cos(t * np.pi / 2.0)
    gains[hi] += np.sin(t * np.pi / 2.0)
    return gains


def mix_block(sources: list[tuple[np.ndarray, np.ndarray]],
              loop_block: np.ndarray | None,
              config: RenderConfig | None = None) -> np.ndarray:
    """Sum (gains, mono block) sources plus the loop bus; trim, master, limit."""
    cfg = config or RenderConfig()
    out = np.zeros((N_CHANNELS, cfg.block_size))
    for gains, mono in sources:
        out += gains[:, None] * mono[None, :]
    if loop_block is not None:
        out += loop_block
    out *= np.asarray(cfg.channel_trims)[:, None]
    out *= cfg.master_gain
    np.clip(out, -cfg.limiter_amplitude, cfg.limiter_amplitude, out=out)
    return out


def stereo_downmix_matrix(layout: ChannelLayout | None = None) -> np.ndarray:
    """(2, 16) equal-power collapse of the ring by angle, for desk testing."""
    layout = layout or ChannelLayout()
    m = np.zeros((2, N_CHANNELS))
    for ch, angle in enumerate(layout.angles_deg):
        # ring angle -> stereo position: x = sin(angle) in [-1, 1], equal power
        t = (np.sin(np.radians(angle)) + 1.0) / 2.0
        m[0, ch] = np.cos(t * np.pi / 2.0)
        m[1, ch] = np.sin(t * np.pi / 2.0)
    return m
