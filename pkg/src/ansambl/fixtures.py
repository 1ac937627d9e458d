"""Synthetic fixtures: voices, corpora, songs, and sensor scripts.

Everything here is parametric synthesis, so the generating parameters act
as ground truth for tests (pitch, duration, labels, cell placement) and
desk-scale demos run without any recorded material.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .vocal_analysis import SAMPLE_RATE

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# elementary signals
# ---------------------------------------------------------------------------

def sine(freq_hz: float, duration_s: float, amplitude: float = 0.5,
         sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    t = np.arange(int(round(duration_s * sample_rate))) / sample_rate
    return amplitude * np.sin(TWO_PI * freq_hz * t)


def silence(duration_s: float, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    return np.zeros(int(round(duration_s * sample_rate)))


def white_noise(duration_s: float, amplitude: float = 0.5, seed: int = 0,
                sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return amplitude * rng.uniform(-1.0, 1.0, int(round(duration_s * sample_rate)))


def harmonic_tone(f0_hz: float | np.ndarray, duration_s: float, amplitude: float = 0.5,
                  n_harmonics: int = 6, rolloff: float = 0.6,
                  vibrato_cents: float = 30.0, vibrato_hz: float = 5.5,
                  sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Sung-vowel stand-in: decaying harmonic stack with slow vibrato.

    `f0_hz` may be a per-sample trajectory for glides and melodies.
    """
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    f0 = np.broadcast_to(np.asarray(f0_hz, dtype=np.float64), (n,))
    dev = 2.0 ** ((vibrato_cents / 1200.0) * np.sin(TWO_PI * vibrato_hz * t))
    phase = TWO_PI * np.cumsum(f0 * dev) / sample_rate
    x = np.zeros(n)
    for k in range(1, n_harmonics + 1):
        x += rolloff ** (k - 1) * np.sin(k * phase)
    x *= amplitude / np.max(np.abs(x))
    return x


def melodic_glide(waypoints_hz: np.ndarray, duration_s: float, amplitude: float = 0.5,
                  sample_rate: int = SAMPLE_RATE, **tone_kwargs) -> np.ndarray:
    """Continuous sung phrase gliding through the given pitch waypoints."""
    n = int(round(duration_s * sample_rate))
    knots = np.linspace(0.0, 1.0, len(waypoints_hz))
    f0 = np.exp(np.interp(np.linspace(0.0, 1.0, n), knots, np.log(waypoints_hz)))
    return harmonic_tone(f0, duration_s, amplitude, sample_rate=sample_rate,
                         **tone_kwargs)


def pulse_train_speech(f0_hz: float = 110.0, duration_s: float = 2.0,
                       amplitude: float = 0.5, noise_db: float = -14.0,
                       seed: int = 0, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Speech stand-in: low-pitch pulse train with broadband noise on top."""
    n = int(round(duration_s * sample_rate))
    rng = np.random.default_rng(seed)
    x = np.zeros(n)
    period = int(sample_rate / f0_hz)
    x[::period] = 1.0
    # smear impulses into short glottal-ish bumps
    kernel = np.hanning(48)
    x = np.convolve(x, kernel, mode="same")
    x /= np.max(np.abs(x))
    noise = rng.standard_normal(n) * 10.0 ** (noise_db / 20.0)
    x = x + noise
    return amplitude * x / np.max(np.abs(x))


def set_rms(x: np.ndarray, rms_dbfs: float) -> np.ndarray:
    """Scale a signal to an exact integrated RMS level."""
    rms = float(np.sqrt(np.mean(x * x)))
    if rms == 0.0:
        return x
    return x * (10.0 ** (rms_dbfs / 20.0) / rms)


# ---------------------------------------------------------------------------
# vocabulary sounds (intermission categories)
# ---------------------------------------------------------------------------

def breathing_sound(duration_s: float = 1.6, seed: int = 0,
                    sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    n = int(round(duration_s * sample_rate))
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n)
    env = np.abs(np.sin(TWO_PI * 0.8 * np.arange(n) / sample_rate)) ** 2
    return noise * env / np.max(np.abs(noise * env) + 1e-12)


def warmup_sound(f0_hz: float = 261.6, duration_s: float = 2.0, seed: int = 0,
                 sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    # rising arpeggio of short harmonic notes
    ratios = (1.0, 1.25, 1.5, 2.0)
    note = duration_s / len(ratios)
    parts = [harmonic_tone(f0_hz * r, note, amplitude=0.8, vibrato_cents=10.0,
                           sample_rate=sample_rate) for r in ratios]
    return np.concatenate(parts)


def chatter_sound(duration_s: float = 1.8, seed: int = 0,
                  sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    return pulse_train_speech(f0_hz=130.0, duration_s=duration_s, seed=seed,
                              sample_rate=sample_rate)


def laughter_sound(duration_s: float = 1.4, seed: int = 0,
                   sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    burst = (np.sin(TWO_PI * 220.0 * t) + 0.4 * np.sin(TWO_PI * 440.0 * t))
    gate = (np.sin(TWO_PI * 4.5 * t) > 0).astype(float)
    x = burst * gate
    return x / np.max(np.abs(x) + 1e-12)


def whisper_sound(duration_s: float = 1.5, seed: int = 0,
                  sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    n = int(round(duration_s * sample_rate))
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n)
    # crude high-tilt shaping: difference filter brightens like unvoiced breath
    shaped = np.diff(noise, prepend=0.0) + 0.2 * noise
    env = np.hanning(n)
    x = shaped * env
    return x / np.max(np.abs(x) + 1e-12)


VOCABULARY_SYNTHS = {
    "Breathing": breathing_sound,
    "WarmUp": warmup_sound,
    "Chatter": chatter_sound,
    "Laughter": laughter_sound,
    "Whisper": whisper_sound,
}


# ---------------------------------------------------------------------------
# corpora
# ---------------------------------------------------------------------------

def make_calibration_clips(n_per_label: int = 4, clip_s: float = 2.5, seed: int = 7,
                           f0_lo: float = 200.0, f0_hi: float = 700.0,
                           sample_rate: int = SAMPLE_RATE) -> dict[str, list[np.ndarray]]:
    """Labeled clips: melodic harmonic singing, pulse-train speech, silence.

    Singing clips glide across the whole vocal range so the calibration
    envelope sees the full spread of spectral signatures.
    """
    rng = np.random.default_rng(seed)
    singing = []
    for _ in range(n_per_label):
        waypoints = np.exp(rng.permutation(
            np.linspace(np.log(f0_lo), np.log(f0_hi), 5)))
        waypoints *= np.exp(rng.uniform(-0.05, 0.05, waypoints.size))
        singing.append(melodic_glide(waypoints, clip_s,
                                     amplitude=float(rng.uniform(0.3, 0.8)),
                                     sample_rate=sample_rate))
    speaking = [
        pulse_train_speech(float(rng.uniform(95.0, 140.0)), clip_s,
                           amplitude=float(rng.uniform(0.3, 0.8)),
                           seed=int(rng.integers(2 ** 31)),
                           sample_rate=sample_rate)
        for _ in range(n_per_label)
    ]
    quiet = [silence(clip_s, sample_rate) for _ in range(n_per_label)]
    return {"singing": singing, "speaking": speaking, "silence": quiet}


def write_calibration_corpus(directory: str | Path, n_per_label: int = 4,
                             seed: int = 7, sample_rate: int = SAMPLE_RATE) -> Path:
    """Write labeled WAV clips plus the corpus manifest; returns manifest path."""
    from .wav_io import write_mono_pcm16

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    clips = make_calibration_clips(n_per_label, seed=seed, sample_rate=sample_rate)
    entries = []
    for label, signals in clips.items():
        for i, x in enumerate(signals):
            name = f"{label}_{i:02d}.wav"
            write_mono_pcm16(directory / name, x, sample_rate)
            entries.append({"path": name, "label": label})
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps(
        {"schema_version": 1, "clips": entries}, indent=2, sort_keys=True) + "\n")
    return manifest


def write_sample_corpus(
    directory: str | Path,
    pitch_edges_hz: tuple[float, ...] = (110.0, 220.0, 440.0, 880.0),
    length_edges_s: tuple[float, ...] = (0.0, 1.0, 3.0, 60.0),
    per_cell: int = 1,
    vocabulary_per_category: int = 3,
    rms_dbfs: float = -12.0,
    seed: int = 11,
    sample_rate: int = SAMPLE_RATE,
) -> Path:
    """Synthesize a full performance + vocabulary dataset and its manifest.

    One sample lands in every (voice_part, technique, pitch bucket, length
    bucket) cell, `per_cell` times, at geometric-centre pitches and interior
    lengths; every clip is normalized to the same integrated RMS so renders
    can reason about gain exactly. Labels in the manifest are the declared
    ground truth; measured fields are left for ingestion to fill.
    """
    from .sample_library import TECHNIQUES, VOICE_PARTS, VOCABULARY_CATEGORIES
    from .wav_io import write_mono_pcm16

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []

    pitch_centers = [float(np.sqrt(a * b))
                     for a, b in zip(pitch_edges_hz, pitch_edges_hz[1:])]
    length_targets = []
    for a, b in zip(length_edges_s, length_edges_s[1:]):
        hi = min(b, a + 2.0)  # keep clips short even in the unbounded-ish top bucket
        length_targets.append(0.5 * (a + hi) if a > 0 else 0.8 * hi)

    for part in VOICE_PARTS:
        for technique in TECHNIQUES:
            for pb, f0 in enumerate(pitch_centers):
                for lb, dur in enumerate(length_targets):
                    for k in range(per_cell):
                        detune = 2.0 ** (float(rng.uniform(-0.5, 0.5)) / 12.0) if per_cell > 1 else 1.0
                        x = harmonic_tone(f0 * detune, dur, amplitude=0.8,
                                          sample_rate=sample_rate)
                        x = set_rms(x, rms_dbfs)
                        sid = f"{part.lower()}_{technique.lower()}_p{pb}_l{lb}_{k}"
                        name = sid + ".wav"
                        write_mono_pcm16(directory / name, x, sample_rate)
                        entries.append({"id": sid, "path": name,
                                        "technique": technique, "voice_part": part})

    for category in VOCABULARY_CATEGORIES:
        synth = VOCABULARY_SYNTHS[category]
        for k in range(vocabulary_per_category):
            x = synth(seed=seed + k)
            x = set_rms(x, rms_dbfs)
            sid = f"vocab_{category.lower()}_{k}"
            name = sid + ".wav"
            write_mono_pcm16(directory / name, x, sample_rate)
            entries.append({"id": sid, "path": name, "category_extra": category})

    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps(
        {"schema_version": 1, "samples": entries}, indent=2, sort_keys=True) + "\n")
    return manifest


# ---------------------------------------------------------------------------
# performer material and sensor scripts
# ---------------------------------------------------------------------------

def make_song(phrases: list[tuple[float, float]], gap_s: float = 1.5,
              amplitude: float = 0.5, lead_in_s: float = 0.5,
              sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Sung phrases (f0, duration) separated by silence; ends with a gap."""
    parts = [silence(lead_in_s, sample_rate)]
    for f0, dur in phrases:
        parts.append(harmonic_tone(f0, dur, amplitude=amplitude,
                                   sample_rate=sample_rate))
        parts.append(silence(gap_s, sample_rate))
    return np.concatenate(parts)


def sensor_script(avatar_events: list[tuple[float, list[tuple[float, float]]]],
                  controls: list[dict] | None = None) -> dict:
    """Script document: timestamped avatar placements plus control events."""
    return {
        "schema_version": 1,
        "avatars": [{"t": float(t), "positions": [[float(x), float(y)] for x, y in pos]}
                    for t, pos in avatar_events],
        "controls": controls or [],
    }
