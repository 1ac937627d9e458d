"""WAV reading and writing.

Reading goes through scipy (PCM 16/24/32 and float variants). The engine's
16-channel output is float32 WAVE_FORMAT_EXTENSIBLE, which scipy's writer
does not emit, so that writer lives here. Mono fixtures are written as
plain PCM16.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import InvalidInputError

# KSDATAFORMAT_SUBTYPE_IEEE_FLOAT
_FLOAT_SUBFORMAT = bytes(
    [0x03, 0x00, 0x00, 0x00, 0x00, 0x00, 0x10, 0x00,
     0x80, 0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71]
)

_INT_SCALE = {np.dtype(np.int16): 2 ** 15, np.dtype(np.int32): 2 ** 31,
              np.dtype(np.uint8): 2 ** 7}


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a WAV file into float64 in [-1, 1]; shape (n,) or (n, channels)."""
    try:
        rate, data = wavfile.read(str(path))
    except (ValueError, EOFError) as exc:
        raise InvalidInputError(f"cannot decode {path}: {exc}") from exc
    dtype = data.dtype
    if dtype in _INT_SCALE:
        data = data.astype(np.float64)
        if dtype == np.uint8:
            data -= 128.0
        data /= _INT_SCALE[dtype]
    else:
        data = data.astype(np.float64)
    return data, int(rate)


def read_mono(path: str | Path, target_rate: int | None = None) -> tuple[np.ndarray, int]:
    """Read a WAV as mono float64, optionally resampling to `target_rate`."""
    data, rate = read_wav(path)
    if data.ndim > 1:
        data = data.mean(axis=1)
    if data.size == 0:
        raise InvalidInputError(f"{path}: zero-length audio")
    if target_rate is not None and rate != target_rate:
        g = np.gcd(rate, target_rate)
        data = resample_poly(data, target_rate // g, rate // g)
        rate = target_rate
    return data, rate


def write_mono_pcm16(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    wavfile.write(str(path), sample_rate, (x * 32767.0).astype(np.int16))


def write_float32(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float32 WAVE_FORMAT_EXTENSIBLE; `samples` is (n,) or (n, channels)."""
    x = np.asarray(samples, dtype=np.float32)
    if x.ndim == 1:
        x = x[:, None]
    n_frames, n_channels = x.shape
    block_align = 4 * n_channels
    data = x.tobytes()  # interleaved, little-endian by construction

    fmt = struct.pack(
        "<HHIIHHHHI16s",
        0xFFFE,                       # WAVE_FORMAT_EXTENSIBLE
        n_channels,
        sample_rate,
        sample_rate * block_align,
        block_align,
        32,                           # bits per sample
        22,                           # cbSize
        32,                           # valid bits
        0,                            # channel mask: unassigned
        _FLOAT_SUBFORMAT,
    )
    fact = struct.pack("<I", n_frames)
    riff_size = 4 + (8 + len(fmt)) + (8 + len(fact)) + (8 + len(data))
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", riff_size) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
        fh.write(b"fact" + struct.pack("<I", len(fact)) + fact)
        fh.write(b"data" + struct.pack("<I", len(data)) + data)
