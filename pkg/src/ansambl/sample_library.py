"""Recorded-voice dataset: ingestion, the bucketed vocal matrix, playlists.

Technique and voice-part labels are declared by hand in the manifest, as
they were for the original recordings; ingestion only measures what a
machine can measure (fundamental, duration, loudness). The matrix indexes
performance samples by (voice part, technique, pitch bucket, length
bucket) and answers call-and-response queries with a documented nearest-
cell fallback and a seeded tie-break.
"""
from __future__ import annotations

import difflib
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, ManifestError
from .vocal_analysis import (
    AnalysisConfig,
    AudioFrame,
    detect_pitch,
    measure_volume,
)
from .wav_io import read_mono

log = logging.getLogger(__name__)

TECHNIQUES = ("Falsetto", "Belting", "MusicalPhrasing")
VOICE_PARTS = ("First", "Second")
VOCABULARY_CATEGORIES = ("Breathing", "WarmUp", "Chatter", "Laughter", "Whisper")

MANIFEST_SCHEMA_VERSION = 1
N_SINGERS = 16
GROUP_SIZE = 8


@dataclass(frozen=True)
class VocalSample:
    id: str
    path: str
    technique: str | None = None
    voice_part: str | None = None
    category_extra: str | None = None
    fundamental_hz: float | None = None
    duration_s: float | None = None
    loudness_dbfs: float | None = None
    unpitched: bool = False

    @property
    def is_performance(self) -> bool:
        return self.technique is not None and self.voice_part is not None


@dataclass(frozen=True)
class BucketConfig:
    """Pitch/length bucket edges; values outside are clamped into the end buckets."""

    pitch_edges_hz: tuple[float, ...] = (110.0, 220.0, 440.0, 880.0)
    length_edges_s: tuple[float, ...] = (0.0, 1.0, 3.0, 60.0)

    def __post_init__(self):
        for name, edges in (("pitch_edges_hz", self.pitch_edges_hz),
                            ("length_edges_s", self.length_edges_s)):
            if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
                raise InvalidInputError(f"{name} must be strictly increasing")

    @property
    def n_pitch_buckets(self) -> int:
        return len(self.pitch_edges_hz) - 1

    @property
    def n_length_buckets(self) -> int:
        return len(self.length_edges_s) - 1

    def pitch_bucket(self, hz: float) -> int:
        e = self.pitch_edges_hz
        hz = min(max(hz, e[0]), e[-1])
        return min(int(np.searchsorted(e, hz, side="right")) - 1, len(e) - 2)

    def length_bucket(self, seconds: float) -> int:
        e = self.length_edges_s
        seconds = min(max(seconds, e[0]), e[-1])
        return min(int(np.searchsorted(e, seconds, side="right")) - 1, len(e) - 2)

    def pitch_center(self, bucket: int) -> float:
        a, b = self.pitch_edges_hz[bucket], self.pitch_edges_hz[bucket + 1]
        return float(np.sqrt(a * b))

    def length_center(self, bucket: int) -> float:
        a, b = self.length_edges_s[bucket], self.length_edges_s[bucket + 1]
        return 0.5 * (a + b)


class VocalMatrix:
    """Index of pitched performance samples plus the vocabulary side table."""

    def __init__(self, samples: Iterable[VocalSample],
                 buckets: BucketConfig | None = None):
        self.buckets = buckets or BucketConfig()
        self.samples: dict[str, VocalSample] = {}
        self.cells: dict[tuple[str, str, int, int], list[str]] = {}
        self.vocabulary: dict[str, list[str]] = {}

        performance = []
        for s in samples:
            if s.id in self.samples:
                raise InvalidInputError(f"duplicate sample id '{s.id}'")
            self.samples[s.id] = s
            if s.is_performance and not s.unpitched:
                performance.append(s)
            elif s.category_extra is not None:
                self.vocabulary.setdefault(s.category_extra, []).append(s.id)
        if not performance:
            raise InvalidInputError("no pitched performance samples to index")

        for s in performance:
            key = (s.voice_part, s.technique,
                   self.buckets.pitch_bucket(s.fundamental_hz),
                   self.buckets.length_bucket(s.duration_s))
            self.cells.setdefault(key, []).append(s.id)
        for (part, tech, pb, lb), ids in self.cells.items():
            center = self.buckets.pitch_center(pb)
            ids.sort(key=lambda i: (abs(self.samples[i].fundamental_hz - center), i))
        for ids in self.vocabulary.values():
            ids.sort()

    def part_ids(self, voice_part: str) -> list[str]:
        return sorted(i for i, s in self.samples.items()
                      if s.is_performance and s.voice_part == voice_part)

    def cell(self, voice_part: str, pitch_bucket: int, length_bucket: int,
             technique: str | None = None) -> list[str]:
        """Samples of one (pitch, length) cell ordered by distance to the
        bucket centre (then id); optionally restricted to one technique."""
        techniques = (technique,) if technique else TECHNIQUES
        out = []
        for t in techniques:
            out.extend(self.cells.get((voice_part, t, pitch_bucket, length_bucket), []))
        center = self.buckets.pitch_center(pitch_bucket)
        out.sort(key=lambda i: (abs(self.samples[i].fundamental_hz - center), i))
        return out


@dataclass(frozen=True)
class PlaylistAssignment:
    playlists: tuple[tuple[str, ...], ...]   # index = singer_id
    part_of: tuple[str, ...]

    def playlist(self, singer_id: int) -> tuple[str, ...]:
        return self.playlists[singer_id]


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def _measure_audio(x: np.ndarray, config: AnalysisConfig):
    duration = len(x) / config.sample_rate_hz
    loudness = measure_volume(AudioFrame(x, config.sample_rate_hz))
    pitches = []
    w, hop = config.window, config.hop
    for start in range(0, len(x) - w + 1, hop):
        pitch, _ = detect_pitch(AudioFrame(x[start:start + w], config.sample_rate_hz),
                                config.pitch_min_hz, config.pitch_max_hz)
        if pitch is not None:
            pitches.append(pitch)
    fundamental = float(np.median(pitches)) if pitches else None
    return fundamental, duration, loudness


def ingest_sample(sample: VocalSample, base_dir: str | Path,
                  config: AnalysisConfig | None = None) -> VocalSample:
    """Measure fundamental/duration/loudness for one declared sample.

    A performance sample with no voiced hops is flagged unpitched and
    reported, not rejected; vocabulary samples never need a pitch.
    """
    config = config or AnalysisConfig()
    x, _ = read_mono(Path(base_dir) / sample.path, target_rate=config.sample_rate_hz)
    peak = float(np.max(np.abs(x)))
    if peak > 1.0:
        x = x / peak
    fundamental, duration, loudness = _measure_audio(x, config)
    unpitched = fundamental is None
    if unpitched and sample.is_performance:
        log.warning("performance sample %s has no voiced hops; flagged unpitched",
                    sample.id)
    return replace(sample, fundamental_hz=fundamental, duration_s=duration,
                   loudness_dbfs=loudness, unpitched=unpitched)


def ingest_manifest(samples: Sequence[VocalSample], base_dir: str | Path,
                    config: AnalysisConfig | None = None) -> list[VocalSample]:
    return [ingest_sample(s, base_dir, config) for s in samples]


# ---------------------------------------------------------------------------
# matrix and playlists
# ---------------------------------------------------------------------------

def build_matrix(samples: Iterable[VocalSample],
                 buckets: BucketConfig | None = None) -> VocalMatrix:
    return VocalMatrix(samples, buckets)


DEFAULT_GROUPING = {
    "First": tuple(range(0, GROUP_SIZE)),
    "Second": tuple(range(GROUP_SIZE, N_SINGERS)),
}


def assign_playlists(matrix: VocalMatrix,
                     grouping: Mapping[str, Sequence[int]] | None = None
                     ) -> PlaylistAssignment:
    """Give every singer of a group the group's full part, plus the vocabulary.

    The grouping must be an 8/8 partition of the 16 singers; vocabulary
    samples carry no voice part and are shared by everyone.
    """
    grouping = {p: tuple(ids) for p, ids in (grouping or DEFAULT_GROUPING).items()}
    if sorted(grouping) != sorted(VOICE_PARTS):
        raise InvalidInputError(f"grouping must cover exactly {VOICE_PARTS}")
    claimed = [i for ids in grouping.values() for i in ids]
    if sorted(claimed) != list(range(N_SINGERS)):
        raise InvalidInputError("grouping must partition singers 0..15")
    if any(len(ids) != GROUP_SIZE for ids in grouping.values()):
        sizes = {p: len(ids) for p, ids in grouping.items()}
        raise InvalidInputError(f"grouping must be an 8/8 split, got {sizes}")

    vocabulary = sorted(i for ids in matrix.vocabulary.values() for i in ids)
    part_lists = {}
    for part in VOICE_PARTS:
        ids = matrix.part_ids(part)
        if not ids:
            raise InvalidInputError(f"voice part {part} empty")
        part_lists[part] = tuple(ids + vocabulary)

    playlists: list[tuple[str, ...]] = [()] * N_SINGERS
    part_of: list[str] = [""] * N_SINGERS
    for part, singer_ids in grouping.items():
        for sid in singer_ids:
            playlists[sid] = part_lists[part]
            part_of[sid] = part
    return PlaylistAssignment(tuple(playlists), tuple(part_of))


def query_matrix(matrix: VocalMatrix, voice_part: str, pitch_hz: float,
                 length_s: float, technique: str | None = None,
                 tie_seed: int | Sequence[int] = 0) -> str:
    """Pick a sample for the target (pitch, length).

    The exact (pitch bucket, length bucket) cell wins; an empty cell falls
    back to the nearest non-empty one by pitch-bucket distance, then
    length-bucket distance (then lower bucket indices). Within the chosen
    cell the requested technique is preferred when present, and the final
    pick among equals is a seeded pseudo-random draw over the cell's
    centre-distance ordering, so it is deterministic per `tie_seed`.
    """
    if voice_part not in VOICE_PARTS:
        raise InvalidInputError(f"unknown voice part '{voice_part}'")
    if not matrix.part_ids(voice_part):
        raise InvalidInputError(f"voice part {voice_part} empty")
    b = matrix.buckets
    pb0 = b.pitch_bucket(pitch_hz)
    lb0 = b.length_bucket(length_s)

    candidates_order = sorted(
        ((pb, lb) for pb in range(b.n_pitch_buckets)
         for lb in range(b.n_length_buckets)),
        key=lambda c: (abs(c[0] - pb0), abs(c[1] - lb0), c[0], c[1]))
    for pb, lb in candidates_order:
        ids = matrix.cell(voice_part, pb, lb)
        if not ids:
            continue
        if technique:
            preferred = matrix.cell(voice_part, pb, lb, technique)
            if preferred:
                ids = preferred
        rng = np.random.default_rng(tie_seed)
        return ids[int(rng.integers(len(ids)))]
    raise InvalidInputError(f"voice part {voice_part} has no indexed cells")


# ---------------------------------------------------------------------------
# manifest I/O and validation
# ---------------------------------------------------------------------------

_SAMPLE_FIELDS = ("id", "path", "technique", "voice_part", "category_extra",
                  "fundamental_hz", "duration_s", "loudness_dbfs", "unpitched")


def load_manifest(path: str | Path) -> list[VocalSample]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(doc, dict) or "samples" not in doc:
        raise ManifestError(f"{path}: manifest must be an object with 'samples'")
    out = []
    for i, entry in enumerate(doc["samples"]):
        unknown = set(entry) - set(_SAMPLE_FIELDS)
        if unknown:
            raise ManifestError(f"{path}: samples[{i}] unknown fields {sorted(unknown)}")
        if "id" not in entry or "path" not in entry:
            raise ManifestError(f"{path}: samples[{i}] needs 'id' and 'path'")
        out.append(VocalSample(**entry))
    return out


def save_manifest(samples: Sequence[VocalSample], path: str | Path) -> None:
    entries = []
    for s in samples:
        entry = {k: getattr(s, k) for k in _SAMPLE_FIELDS}
        entries.append({k: v for k, v in entry.items()
                        if v is not None and not (k == "unpitched" and v is False)})
    doc = {"schema_version": MANIFEST_SCHEMA_VERSION, "samples": entries}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class Finding:
    kind: str
    message: str
    sample_id: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]
    counts: dict

    @property
    def ok(self) -> bool:
        return not self.findings


def validate_manifest(path: str | Path) -> ValidationReport:
    """Check files, ids, labels, and voice-part balance; returns findings."""
    path = Path(path)
    samples = load_manifest(path)
    findings: list[Finding] = []

    seen: dict[str, int] = {}
    for i, s in enumerate(samples):
        if s.id in seen:
            findings.append(Finding(
                "duplicate-id",
                f"id '{s.id}' declared at samples[{seen[s.id]}] and samples[{i}]",
                s.id))
        else:
            seen[s.id] = i
        if not (path.parent / s.path).exists():
            findings.append(Finding("missing-file", f"{s.path} not found", s.id))
        if s.technique is not None and s.technique not in TECHNIQUES:
            close = difflib.get_close_matches(s.technique, TECHNIQUES, n=1)
            hint = f"; did you mean '{close[0]}'?" if close else ""
            findings.append(Finding(
                "unknown-technique", f"'{s.technique}'{hint}", s.id))
        if s.voice_part is not None and s.voice_part not in VOICE_PARTS:
            close = difflib.get_close_matches(s.voice_part, VOICE_PARTS, n=1)
            hint = f"; did you mean '{close[0]}'?" if close else ""
            findings.append(Finding(
                "unknown-voice-part", f"'{s.voice_part}'{hint}", s.id))
        if s.category_extra is not None and s.category_extra not in VOCABULARY_CATEGORIES:
            close = difflib.get_close_matches(s.category_extra, VOCABULARY_CATEGORIES, n=1)
            hint = f"; did you mean '{close[0]}'?" if close else ""
            findings.append(Finding(
                "unknown-category", f"'{s.category_extra}'{hint}", s.id))
        if not s.is_performance and s.category_extra is None:
            findings.append(Finding(
                "unlabeled", "neither performance labels nor a vocabulary category",
                s.id))

    per_part = {p: sum(1 for s in samples if s.voice_part == p) for p in VOICE_PARTS}
    if per_part["First"] != per_part["Second"]:
        findings.append(Finding(
            "voice-part-imbalance",
            f"First has {per_part['First']} samples, Second has {per_part['Second']}"))

    counts = {
        "samples": len(samples),
        "performance": sum(1 for s in samples if s.is_performance),
        "vocabulary": sum(1 for s in samples if s.category_extra is not None),
        "per_part": per_part,
        "per_technique": {t: sum(1 for s in samples if s.technique == t)
                          for t in TECHNIQUES},
    }
    return ValidationReport(tuple(findings), counts)
