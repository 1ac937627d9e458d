"""Performer-voice analysis: pitch, level, attack class, and the sing/speak gate.

The analysis path is a fixed window/hop pipeline over the mono microphone
signal. Pitch uses a normalized-autocorrelation detector (YIN family) with
parabolic interpolation. The sing/speak gate is a conjunction of pitch
confidence, level, and per-band normalized spectral energy bounds measured
from a labeled calibration corpus, so a profile is auditable data rather
than a trained model.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import CalibrationError, InvalidInputError, StreamFormatError

SAMPLE_RATE = 48_000
WINDOW = 2048
HOP = 512

PITCH_MIN_HZ = 60.0
PITCH_MAX_HZ = 1500.0

SILENCE_FLOOR_DBFS = -120.0

# YIN absolute threshold for the first-dip search.
YIN_THRESHOLD = 0.15
# Below this confidence the detector reports "no pitch".
VOICED_CONFIDENCE = 0.5

CALIBRATION_LABELS = ("singing", "speaking", "silence")
MIN_CLIP_SECONDS = 2.0


class Attack(Enum):
    NONE = "none"
    SHORT_STRONG = "short_strong"
    LONG_SOFT = "long_soft"


@dataclass(frozen=True)
class AudioFrame:
    """One hop or window of mono samples; amplitudes must stay in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE
    start_time: int = 0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", x)
        if self.sample_rate_hz <= 0:
            raise InvalidInputError("sample_rate_hz must be positive")
        if x.size and float(np.max(np.abs(x))) > 1.0 + 1e-9:
            raise InvalidInputError("samples exceed [-1, 1]")


@dataclass(frozen=True)
class VocalFeatures:
    """Per-hop record; `timestamp` is the sample index of the window centre."""

    pitch_hz: float | None
    pitch_confidence: float
    volume_dbfs: float
    attack: Attack
    is_singing: bool
    timestamp: int


@dataclass(frozen=True)
class AttackConfig:
    band_low_hz: float = 2000.0
    band_high_hz: float = 6000.0
    window_hops: int = 10
    strong_rise_db: float = 12.0
    soft_rise_db: float = 6.0

    def __post_init__(self):
        if not self.band_low_hz < self.band_high_hz:
            raise InvalidInputError("attack band: low must be < high")
        if not self.strong_rise_db > self.soft_rise_db > 0:
            raise InvalidInputError("attack rises: need strong > soft > 0")
        if self.window_hops < 2:
            raise InvalidInputError("attack window_hops must be >= 2")


@dataclass(frozen=True)
class AnalysisConfig:
    sample_rate_hz: int = SAMPLE_RATE
    window: int = WINDOW
    hop: int = HOP
    pitch_min_hz: float = PITCH_MIN_HZ
    pitch_max_hz: float = PITCH_MAX_HZ
    attack: AttackConfig = field(default_factory=AttackConfig)

    def __post_init__(self):
        if self.window % self.hop != 0:
            raise InvalidInputError("window must be a multiple of hop")
        if self.window < 2 * int(self.sample_rate_hz / self.pitch_min_hz):
            raise InvalidInputError(
                "window too short for two periods of pitch_min_hz")


DEFAULT_BAND_EDGES_HZ = (100.0, 250.0, 600.0, 1200.0, 2400.0, 4800.0, 9600.0, 16000.0)


@dataclass(frozen=True)
class GateProfile:
    """Spectral signature of the artist singing, as measured limits."""

    band_edges_hz: tuple[float, ...]
    singing_energy_bounds: tuple[tuple[float, float], ...]
    min_pitch_confidence: float
    min_volume_dbfs: float
    sample_rate_hz: int = SAMPLE_RATE
    schema_version: int = 1

    def __post_init__(self):
        edges = tuple(float(e) for e in self.band_edges_hz)
        object.__setattr__(self, "band_edges_hz", edges)
        bounds = tuple((float(a), float(b)) for a, b in self.singing_energy_bounds)
        object.__setattr__(self, "singing_energy_bounds", bounds)
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise InvalidInputError("band edges must be strictly increasing")
        if edges and not (0.0 < edges[0] and edges[-1] < self.sample_rate_hz / 2):
            raise InvalidInputError("band edges must lie in (0, sample_rate/2)")
        if len(bounds) != len(edges) - 1:
            raise InvalidInputError("need one (min, max) bound per band")
        if any(hi < lo for lo, hi in bounds):
            raise InvalidInputError("band bound min must be <= max")

    def save(self, path: str | Path) -> None:
        doc = {
            "schema_version": self.schema_version,
            "sample_rate_hz": self.sample_rate_hz,
            "band_edges_hz": list(self.band_edges_hz),
            "singing_energy_bounds": [list(b) for b in self.singing_energy_bounds],
            "min_pitch_confidence": self.min_pitch_confidence,
            "min_volume_dbfs": self.min_volume_dbfs,
        }
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GateProfile":
        doc = json.loads(Path(path).read_text())
        return cls(
            band_edges_hz=tuple(doc["band_edges_hz"]),
            singing_energy_bounds=tuple(tuple(b) for b in doc["singing_energy_bounds"]),
            min_pitch_confidence=doc["min_pitch_confidence"],
            min_volume_dbfs=doc["min_volume_dbfs"],
            sample_rate_hz=doc.get("sample_rate_hz", SAMPLE_RATE),
            schema_version=doc.get("schema_version", 1),
        )


# ---------------------------------------------------------------------------
# pitch
# ---------------------------------------------------------------------------

def _difference_function(x: np.ndarray, tau_max: int) -> np.ndarray:
    """YIN difference d(tau) for tau in [0, tau_max], frame-limited."""
    n = x.size
    size = 1 << int(n + tau_max).bit_length()
    f = np.fft.rfft(x, size)
    acf = np.fft.irfft(f * np.conj(f), size)[: tau_max + 1]
    energy = np.concatenate(([0.0], np.cumsum(x * x)))
    taus = np.arange(tau_max + 1)
    d = energy[n - taus] + (energy[n] - energy[taus]) - 2.0 * acf
    return np.maximum(d, 0.0)


def _cmndf(d: np.ndarray) -> np.ndarray:
    out = np.ones_like(d)
    csum = np.cumsum(d[1:])
    taus = np.arange(1, d.size, dtype=np.float64)
    nz = csum > 0.0
    out[1:][nz] = d[1:][nz] * taus[nz] / csum[nz]
    return out


def detect_pitch(
    frame: AudioFrame,
    pitch_min_hz: float = PITCH_MIN_HZ,
    pitch_max_hz: float = PITCH_MAX_HZ,
) -> tuple[float | None, float]:
    """Fundamental of a periodic component in range, plus confidence in [0, 1].

    Returns (None, confidence) when no candidate reaches VOICED_CONFIDENCE.
    Raises InvalidInputError when the frame is shorter than two periods of
    the lowest detectable pitch.
    """
    x = frame.samples
    sr = frame.sample_rate_hz
    tau_max = int(sr / pitch_min_hz)
    if x.size < 2 * tau_max:
        raise InvalidInputError(
            f"frame of {x.size} samples is shorter than two periods of "
            f"{pitch_min_hz} Hz ({2 * tau_max} samples)")
    tau_min = max(2, int(np.ceil(sr / pitch_max_hz)))

    d = _difference_function(x, tau_max)
    c = _cmndf(d)

    below = np.flatnonzero(c[tau_min: tau_max + 1] < YIN_THRESHOLD)
    if below.size:
        tau = int(below[0]) + tau_min
        while tau + 1 <= tau_max and c[tau + 1] < c[tau]:
            tau += 1
    else:
        tau = int(np.argmin(c[tau_min: tau_max + 1])) + tau_min

    confidence = float(np.clip(1.0 - c[tau], 0.0, 1.0))
    if confidence < VOICED_CONFIDENCE:
        return None, confidence

    # parabolic interpolation on the difference dip
    if tau_min < tau < tau_max:
        a, b, cc = c[tau - 1], c[tau], c[tau + 1]
        denom = a - 2.0 * b + cc
        if abs(denom) > 1e-12:
            tau_refined = tau + 0.5 * (a - cc) / denom
        else:
            tau_refined = float(tau)
    else:
        tau_refined = float(tau)
    tau_refined = float(np.clip(tau_refined, tau_min, tau_max))

    pitch = sr / tau_refined
    if not (pitch_min_hz <= pitch <= pitch_max_hz):
        return None, confidence
    return pitch, confidence


# ---------------------------------------------------------------------------
# level and attack
# ---------------------------------------------------------------------------

def measure_volume(frame: AudioFrame) -> float:
    """RMS level in dBFS, floored at SILENCE_FLOOR_DBFS."""
    x = frame.samples
    if x.size == 0:
        raise InvalidInputError("empty frame")
    rms = float(np.sqrt(np.mean(x * x)))
    floor_amp = 10.0 ** (SILENCE_FLOOR_DBFS / 20.0)
    if rms <= floor_amp:
        return SILENCE_FLOOR_DBFS
    return 20.0 * float(np.log10(rms))


def classify_attack(band_energy_history: Sequence[float], config: AttackConfig) -> Attack:
    """Attack class from the dB rise (max - min) over the trailing window."""
    if len(band_energy_history) < config.window_hops:
        raise InvalidInputError(
            f"history of {len(band_energy_history)} hops shorter than "
            f"window_hops={config.window_hops}")
    window = np.asarray(band_energy_history[-config.window_hops:], dtype=np.float64)
    rise = float(window.max() - window.min())
    if rise >= config.strong_rise_db:
        return Attack.SHORT_STRONG
    if rise >= config.soft_rise_db:
        return Attack.LONG_SOFT
    return Attack.NONE


# ---------------------------------------------------------------------------
# spectral bands
# ---------------------------------------------------------------------------

def band_energies(power_spectrum: np.ndarray, freqs: np.ndarray,
                  band_edges_hz: Sequence[float]) -> np.ndarray:
    """Per-band energy as a fraction of total spectral energy (zeros if silent)."""
    total = float(power_spectrum.sum())
    n_bands = len(band_edges_hz) - 1
    if total <= 1e-12:
        return np.zeros(n_bands)
    idx = np.searchsorted(freqs, band_edges_hz)
    out = np.empty(n_bands)
    for i in range(n_bands):
        out[i] = power_spectrum[idx[i]: idx[i + 1]].sum() / total
    return out


def band_level_db(power_spectrum: np.ndarray, freqs: np.ndarray,
                  low_hz: float, high_hz: float) -> float:
    """Absolute band energy in dB (for attack tracking), floored."""
    lo, hi = np.searchsorted(freqs, [low_hz, high_hz])
    e = float(power_spectrum[lo:hi].sum())
    if e <= 10.0 ** (SILENCE_FLOOR_DBFS / 10.0):
        return SILENCE_FLOOR_DBFS
    return 10.0 * float(np.log10(e))


def gate_is_singing(pitch_hz: float | None, confidence: float, volume_dbfs: float,
                    energies: np.ndarray, profile: GateProfile) -> bool:
    """Singing iff pitched with confidence, loud enough, and inside every band bound."""
    if pitch_hz is None or confidence < profile.min_pitch_confidence:
        return False
    if volume_dbfs < profile.min_volume_dbfs:
        return False
    for e, (lo, hi) in zip(energies, profile.singing_energy_bounds):
        if not lo <= e <= hi:
            return False
    return True


# ---------------------------------------------------------------------------
# hop analysis / streaming
# ---------------------------------------------------------------------------

class HopAnalyzer:
    """Computes the per-window raw measurements shared by gate and stream."""

    def __init__(self, config: AnalysisConfig, band_edges_hz: Sequence[float]):
        self.config = config
        self.band_edges_hz = tuple(band_edges_hz)
        self._hann = np.hanning(config.window)
        self._freqs = np.fft.rfftfreq(config.window, 1.0 / config.sample_rate_hz)
        self._scratch = np.empty(config.window)

    def measure(self, window_samples: np.ndarray, start_time: int = 0):
        cfg = self.config
        frame = AudioFrame(window_samples, cfg.sample_rate_hz, start_time)
        volume = measure_volume(frame)
        if volume <= SILENCE_FLOOR_DBFS:
            # silent window: nothing periodic, no band energy to bin
            n_bands = len(self.band_edges_hz) - 1
            return None, 0.0, volume, np.zeros(n_bands), SILENCE_FLOOR_DBFS
        pitch, conf = detect_pitch(frame, cfg.pitch_min_hz, cfg.pitch_max_hz)
        np.multiply(window_samples, self._hann, out=self._scratch)
        spectrum = np.abs(np.fft.rfft(self._scratch)) ** 2
        energies = band_energies(spectrum, self._freqs, self.band_edges_hz)
        attack_db = band_level_db(spectrum, self._freqs,
                                  cfg.attack.band_low_hz, cfg.attack.band_high_hz)
        return pitch, conf, volume, energies, attack_db


class StreamAnalyzer:
    """Push hop-sized AudioFrames in order; pull one VocalFeatures per hop.

    The per-hop path reuses preallocated buffers; a mid-stream sample-rate
    change raises StreamFormatError and resets all state.
    """

    def __init__(self, profile: GateProfile, config: AnalysisConfig | None = None):
        self.config = config or AnalysisConfig()
        self.profile = profile
        self._hop_analyzer = HopAnalyzer(self.config, profile.band_edges_hz)
        self._window_buf = np.zeros(self.config.window)
        self._attack_history: deque[float] = deque(maxlen=self.config.attack.window_hops)
        self._consumed = 0

    def reset(self) -> None:
        self._window_buf[:] = 0.0
        self._attack_history.clear()
        self._consumed = 0

    def push(self, frame: AudioFrame) -> list[VocalFeatures]:
        cfg = self.config
        if frame.sample_rate_hz != cfg.sample_rate_hz:
            self.reset()
            raise StreamFormatError(
                f"sample rate changed to {frame.sample_rate_hz}; state reset")
        if frame.samples.size != cfg.hop:
            raise InvalidInputError(
                f"expected hop of {cfg.hop} samples, got {frame.samples.size}")

        self._window_buf[:-cfg.hop] = self._window_buf[cfg.hop:]
        self._window_buf[-cfg.hop:] = frame.samples
        self._consumed += cfg.hop
        if self._consumed < cfg.window:
            return []

        window_start = self._consumed - cfg.window
        pitch, conf, volume, energies, attack_db = self._hop_analyzer.measure(
            self._window_buf, window_start)
        self._attack_history.append(attack_db)
        if len(self._attack_history) == cfg.attack.window_hops:
            attack = classify_attack(list(self._attack_history), cfg.attack)
        else:
            attack = Attack.NONE
        singing = gate_is_singing(pitch, conf, volume, energies, self.profile)
        return [VocalFeatures(
            pitch_hz=pitch,
            pitch_confidence=conf,
            volume_dbfs=volume,
            attack=attack,
            is_singing=singing,
            timestamp=window_start + cfg.window // 2,
        )]


def analyze_stream(frames: Iterable[AudioFrame], profile: GateProfile,
                   config: AnalysisConfig | None = None) -> Iterator[VocalFeatures]:
    """One VocalFeatures per hop once the first full window has arrived."""
    analyzer = StreamAnalyzer(profile, config)
    for frame in frames:
        yield from analyzer.push(frame)


def analyze_signal(samples: np.ndarray, profile: GateProfile,
                   config: AnalysisConfig | None = None) -> list[VocalFeatures]:
    """Batch wrapper: run the stream analyzer over a whole mono signal."""
    config = config or AnalysisConfig()
    hop = config.hop
    n_hops = len(samples) // hop

    def frames():
        for h in range(n_hops):
            yield AudioFrame(samples[h * hop:(h + 1) * hop],
                             config.sample_rate_hz, h * hop)

    return list(analyze_stream(frames(), profile, config))


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationReport:
    hop_counts: dict
    rejection_rates: dict          # per non-singing label
    false_reject_rate: float       # singing hops the gate refuses
    achieved_rate: float           # worst non-singing rejection rate
    separability: float            # min(achieved, 1 - false_reject)


def _clip_measurements(clips: Sequence[np.ndarray], analyzer: HopAnalyzer,
                       config: AnalysisConfig):
    rows = []
    w, hop = config.window, config.hop
    for clip in clips:
        x = np.asarray(clip, dtype=np.float64)
        for start in range(0, x.size - w + 1, hop):
            rows.append(analyzer.measure(x[start:start + w], start))
    return rows


def build_voice_profile(
    calibration_clips: Mapping[str, Sequence[np.ndarray]],
    config: AnalysisConfig | None = None,
    band_edges_hz: Sequence[float] = DEFAULT_BAND_EDGES_HZ,
    required_rejection: float = 0.95,
) -> tuple[GateProfile, CalibrationReport]:
    """Fit gate bounds from labeled clips of the artist's voice.

    Band bounds are the envelope of the singing hops (so no singing hop is
    rejected); the profile is accepted only if, for every non-singing label,
    at least `required_rejection` of its hops end up outside the gate.
    """
    config = config or AnalysisConfig()
    for label in CALIBRATION_LABELS:
        if not calibration_clips.get(label):
            raise InvalidInputError(f"missing label '{label}' in calibration corpus")
    min_samples = int(MIN_CLIP_SECONDS * config.sample_rate_hz)
    for label, clips in calibration_clips.items():
        for i, clip in enumerate(clips):
            if len(clip) < min_samples:
                raise InvalidInputError(
                    f"clip {i} of label '{label}' shorter than {MIN_CLIP_SECONDS} s")

    analyzer = HopAnalyzer(config, band_edges_hz)
    measured = {label: _clip_measurements(clips, analyzer, config)
                for label, clips in calibration_clips.items()}

    sing = measured["singing"]
    energies = np.array([row[3] for row in sing])
    lo = energies.min(axis=0)
    hi = energies.max(axis=0)
    margin = 0.02 + 0.05 * (hi - lo)
    bounds = tuple((max(float(l - m), 0.0), min(float(h + m), 1.0))
                   for l, h, m in zip(lo, hi, margin))

    confidences = [row[1] for row in sing]
    volumes = [row[2] for row in sing]
    min_conf = max(VOICED_CONFIDENCE, min(confidences) - 0.05)
    min_vol = min(volumes) - 6.0

    profile = GateProfile(
        band_edges_hz=tuple(band_edges_hz),
        singing_energy_bounds=bounds,
        min_pitch_confidence=float(min_conf),
        min_volume_dbfs=float(min_vol),
        sample_rate_hz=config.sample_rate_hz,
    )

    def accepted(row):
        pitch, conf, volume, e, _ = row
        return gate_is_singing(pitch, conf, volume, e, profile)

    false_reject = 1.0 - sum(accepted(r) for r in sing) / len(sing)
    rejection = {}
    for label in calibration_clips:
        if label == "singing":
            continue
        rows = measured[label]
        rejection[label] = 1.0 - sum(accepted(r) for r in rows) / len(rows)

    achieved = min(rejection.values())
    report = CalibrationReport(
        hop_counts={label: len(rows) for label, rows in measured.items()},
        rejection_rates=rejection,
        false_reject_rate=false_reject,
        achieved_rate=achieved,
        separability=min(achieved, 1.0 - false_reject),
    )
    if achieved < required_rejection:
        raise CalibrationError(
            f"corpus not separable: worst rejection {achieved:.3f} "
            f"< required {required_rejection:.2f}",
            achieved_rate=achieved, per_label=rejection)
    return profile, report
