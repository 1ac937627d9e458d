"""The sixteen singer agents: stereo pairs, voice groups, pre-defined
types, scenario rules, call-and-response, proximity modulation, and the
installation-mode autonomy (provocations, idle vocabulary, duets).

The ensemble is a single-threaded deterministic state machine ticked once
per render block. All randomness flows from per-singer generators seeded
at construction, so a recorded (features, sensors) trace replays to an
identical command stream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, InvalidInputError
from .led_control import LedPattern, pulse_rate_hz
from .sample_library import (
    N_SINGERS,
    TECHNIQUES,
    VOICE_PARTS,
    PlaylistAssignment,
    VocalMatrix,
    query_matrix,
)
from .sensor_io import SensorFrame
from .vocal_analysis import Attack, VocalFeatures

WHISPER = "Whisper"


class Mode(Enum):
    LIVE = "live"
    INSTALLATION = "installation"


# ---------------------------------------------------------------------------
# singer roster
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SingerType:
    """Behavioural preset: how eager a singer is to act and to answer."""

    name: str
    activity_level: float           # per-idle-tick self-initiation probability
    interaction_likelihood: float   # probability of answering a provocation
    relation_bias: tuple[float, ...] | None = None  # duet-partner affinity, len 16

    def __post_init__(self):
        for p in (self.activity_level, self.interaction_likelihood):
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"types.{self.name}", "probabilities must lie in [0, 1]")
        if self.relation_bias is not None and len(self.relation_bias) != N_SINGERS:
            raise ConfigError(f"types.{self.name}", "relation_bias needs 16 weights")


SINGER_TYPE_PRESETS = {
    "placid": SingerType("placid", activity_level=0.0002, interaction_likelihood=0.4),
    "eager": SingerType("eager", activity_level=0.0010, interaction_likelihood=0.9),
    "shy": SingerType("shy", activity_level=0.0001, interaction_likelihood=0.15),
    "leader": SingerType("leader", activity_level=0.0005, interaction_likelihood=0.7),
}


@dataclass(frozen=True)
class SingerConfig:
    singer_id: int
    voice_part: str
    pair_id: int
    singer_type: SingerType
    rng_seed: int


def validate_roster(singers: Sequence[SingerConfig]) -> None:
    """16 singers, an 8/8 part split, pairing an involution with no fixed points."""
    if len(singers) != N_SINGERS:
        raise ConfigError("singers", f"need {N_SINGERS} singers, got {len(singers)}")
    ids = [s.singer_id for s in singers]
    if sorted(ids) != list(range(N_SINGERS)):
        raise ConfigError("singers", "singer_id values must cover 0..15")
    by_id = {s.singer_id: s for s in singers}
    for s in singers:
        if s.voice_part not in VOICE_PARTS:
            raise ConfigError(f"singers[{s.singer_id}].voice_part",
                              f"unknown part '{s.voice_part}'")
        if not 0 <= s.pair_id < N_SINGERS:
            raise ConfigError(f"singers[{s.singer_id}].pair_id", "outside 0..15")
        if s.pair_id == s.singer_id:
            raise ConfigError(f"singers[{s.singer_id}].pair_id",
                              "a singer cannot pair with itself")
        if by_id[s.pair_id].pair_id != s.singer_id:
            raise ConfigError(f"singers[{s.singer_id}].pair_id",
                              f"pairing is not an involution with {s.pair_id}")
    per_part = {p: sum(1 for s in singers if s.voice_part == p) for p in VOICE_PARTS}
    if any(n != N_SINGERS // 2 for n in per_part.values()):
        raise ConfigError("singers", f"voice parts must split 8/8, got {per_part}")


def default_singers(seed: int = 0) -> list[SingerConfig]:
    """First voice 0..7, Second 8..15, diametric stereo pairs i <-> i+8."""
    type_cycle = ("leader", "placid", "eager", "shy")
    out = []
    for i in range(N_SINGERS):
        out.append(SingerConfig(
            singer_id=i,
            voice_part="First" if i < 8 else "Second",
            pair_id=(i + 8) % N_SINGERS,
            singer_type=SINGER_TYPE_PRESETS[type_cycle[i % 4]],
            rng_seed=seed * N_SINGERS + i,
        ))
    return out


# ---------------------------------------------------------------------------
# proximity tiers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProximityTier:
    """One bucket band: which technique and gain a nearby listener hears."""

    min_bucket: int
    max_bucket: int
    technique: str | None   # None = full voice; WHISPER selects vocabulary
    gain: float


DEFAULT_TIERS = (
    ProximityTier(8, 10, None, 1.0),
    ProximityTier(4, 7, "Falsetto", 0.7),
    ProximityTier(1, 3, WHISPER, 0.4),
)


def validate_tiers(tiers: Sequence[ProximityTier]) -> tuple[ProximityTier, ...]:
    ordered = sorted(tiers, key=lambda t: t.min_bucket)
    expected = 1
    for i, t in enumerate(ordered):
        if t.min_bucket != expected or t.max_bucket < t.min_bucket:
            raise ConfigError(f"tiers[{i}]", "tiers must tile buckets 1..10 in order")
        if not 0.0 <= t.gain:
            raise ConfigError(f"tiers[{i}].gain", "gain must be >= 0")
        if t.technique is not None and t.technique not in TECHNIQUES + (WHISPER,):
            raise ConfigError(f"tiers[{i}].technique", f"unknown '{t.technique}'")
        expected = t.max_bucket + 1
    if expected != 11:
        raise ConfigError("tiers", "tiers must cover buckets up to 10")
    gains = [t.gain for t in ordered]
    if any(b < a for a, b in zip(gains, gains[1:])):
        raise ConfigError("tiers", "gain must be non-decreasing with bucket")
    return tuple(ordered)


def proximity_modulate(bucket: int, tiers: Sequence[ProximityTier] = DEFAULT_TIERS
                       ) -> ProximityTier:
    """Tier for a proximity bucket; monotone by construction of the tier table."""
    if not 1 <= bucket <= 10:
        raise InvalidInputError(f"bucket {bucket} outside 1..10")
    for tier in tiers:
        if tier.min_bucket <= bucket <= tier.max_bucket:
            return tier
    raise InvalidInputError(f"no tier covers bucket {bucket}")


# ---------------------------------------------------------------------------
# scenario rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RuleAction:
    kind: str                      # respond_all | respond_group | respond_pair
    group: str | None = None
    technique: str = "Belting"     # baseline full-voice selection preference
    pair_enabled: bool = False


RULE_KINDS = ("respond_all", "respond_group", "respond_pair")


@dataclass(frozen=True)
class ScenarioRule:
    """Data-driven 'predetermined margins' row; first match wins."""

    rule_id: str
    modes: tuple[str, ...] = (Mode.LIVE.value,)
    pitch_range_hz: tuple[float, float] = (0.0, 24000.0)
    volume_range_dbfs: tuple[float, float] = (-120.0, 0.0)
    attack_in: tuple[str, ...] | None = None
    max_bucket_any: int | None = None
    action: RuleAction = field(default_factory=lambda: RuleAction("respond_all"))

    def __post_init__(self):
        for name, (lo, hi) in (("pitch_range_hz", self.pitch_range_hz),
                               ("volume_range_dbfs", self.volume_range_dbfs)):
            if lo > hi:
                raise ConfigError(f"rule '{self.rule_id}'.{name}", "min must be <= max")
        if any(m not in (Mode.LIVE.value, Mode.INSTALLATION.value) for m in self.modes):
            raise ConfigError(f"rule '{self.rule_id}'.modes", "unknown mode")
        if self.action.kind not in RULE_KINDS:
            raise ConfigError(f"rule '{self.rule_id}'.action", f"unknown kind "
                              f"'{self.action.kind}'")
        if self.action.kind == "respond_group" and self.action.group not in VOICE_PARTS:
            raise ConfigError(f"rule '{self.rule_id}'.action.group",
                              "respond_group needs a voice part")


DEFAULT_RULES = (ScenarioRule("call-response"),)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlayCommand:
    singer_id: int
    sample_id: str
    gain: float
    technique_override: str | None = None


@dataclass(frozen=True)
class StopCommand:
    singer_id: int


@dataclass(frozen=True)
class SetLedCommand:
    singer_id: int
    pattern: LedPattern
    rate_hz: float = 0.0


EnsembleCommand = PlayCommand | StopCommand | SetLedCommand


@dataclass(frozen=True)
class TickResult:
    commands: tuple[EnsembleCommand, ...]
    events: tuple[dict, ...]


# ---------------------------------------------------------------------------
# phrase tracking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Phrase:
    pitch_hz: float
    length_s: float
    peak_volume_dbfs: float
    attacks: frozenset
    onset_timestamp: int


class PhraseTracker:
    """Onset = first gated hop; offset = `offset_hops` consecutive ungated hops."""

    def __init__(self, hop_s: float, offset_hops: int = 8, min_voiced_hops: int = 2):
        self.hop_s = hop_s
        self.offset_hops = offset_hops
        self.min_voiced_hops = min_voiced_hops
        self._in_phrase = False
        self._ungated_run = 0
        self._pitches: list[float] = []
        self._volumes: list[float] = []
        self._attacks: set = set()
        self._onset = 0

    def push(self, f: VocalFeatures) -> Phrase | None:
        if f.is_singing:
            if not self._in_phrase:
                self._in_phrase = True
                self._pitches = []
                self._volumes = []
                self._attacks = set()
                self._onset = f.timestamp
            self._ungated_run = 0
            self._pitches.append(f.pitch_hz)
            self._volumes.append(f.volume_dbfs)
            if f.attack is not Attack.NONE:
                self._attacks.add(f.attack)
            return None
        if not self._in_phrase:
            return None
        self._ungated_run += 1
        if self._ungated_run < self.offset_hops:
            return None
        self._in_phrase = False
        self._ungated_run = 0
        if len(self._pitches) < self.min_voiced_hops:
            return None
        return Phrase(
            pitch_hz=float(np.median(self._pitches)),
            length_s=len(self._pitches) * self.hop_s,
            peak_volume_dbfs=max(self._volumes),
            attacks=frozenset(self._attacks),
            onset_timestamp=self._onset,
        )


# ---------------------------------------------------------------------------
# vocabulary scheduling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VocabularyConfig:
    mean_interval_s: float = 45.0
    weights: tuple[tuple[str, float], ...] = (
        ("Breathing", 1.0), ("WarmUp", 1.0), ("Chatter", 1.0),
        ("Laughter", 1.0), ("Whisper", 1.0))
    duet_probability: float = 0.15
    duet_stagger_s: float = 1.2
    provocation_bucket: int = 3

    def __post_init__(self):
        if self.mean_interval_s <= 0:
            raise ConfigError("vocabulary.mean_interval_s", "must be positive")
        if not 0.0 <= self.duet_probability <= 1.0:
            raise ConfigError("vocabulary.duet_probability", "must lie in [0, 1]")
        if any(w < 0 for _, w in self.weights) or not any(w > 0 for _, w in self.weights):
            raise ConfigError("vocabulary.weights", "need non-negative weights, not all zero")


@dataclass(frozen=True)
class VocabEvent:
    tick: int
    singer_id: int
    category: str
    kind: str                      # solo | duet | triplet
    partners: tuple[int, ...] = ()


class VocabularyScheduler:
    """Per-singer Poisson process over idle vocabulary, with duets/triplets.

    A due event waits for its singer to fall idle instead of being dropped,
    so long-run event counts keep the configured mean.
    """

    def __init__(self, config: VocabularyConfig, tick_rate_hz: float, seed: int,
                 available: Sequence[str], relation_bias_of=None):
        self.config = config
        self.tick_rate_hz = tick_rate_hz
        weights = [(c, w) for c, w in config.weights if c in available and w > 0]
        if not weights:
            weights = [(c, 1.0) for c in available]
        self._categories = [c for c, _ in weights]
        p = np.array([w for _, w in weights], dtype=np.float64)
        self._probabilities = p / p.sum()
        self._relation_bias_of = relation_bias_of or (lambda s: None)
        self._rngs = [np.random.default_rng(np.random.SeedSequence([seed, 7001, i]))
                      for i in range(N_SINGERS)]
        self._due = [self._draw_interval(i) for i in range(N_SINGERS)]

    def _draw_interval(self, singer_id: int) -> int:
        s = self._rngs[singer_id].exponential(self.config.mean_interval_s)
        return max(1, int(round(s * self.tick_rate_hz)))

    def _pick_category(self, singer_id: int) -> str:
        rng = self._rngs[singer_id]
        return self._categories[int(rng.choice(len(self._categories),
                                               p=self._probabilities))]

    def _pick_partners(self, singer_id: int, rng) -> tuple[int, ...]:
        neighbours = ((singer_id - 1) % N_SINGERS, (singer_id + 1) % N_SINGERS)
        if rng.random() < 0.5:
            bias = self._relation_bias_of(singer_id)
            if bias is not None:
                w = np.array([bias[n] for n in neighbours], dtype=np.float64)
                w = w / w.sum() if w.sum() > 0 else None
            else:
                w = None
            return (int(rng.choice(neighbours, p=w)),)
        return neighbours

    def poll(self, tick: int, is_idle) -> list[VocabEvent]:
        events = []
        for i in range(N_SINGERS):
            if tick < self._due[i] or not is_idle(i):
                continue
            rng = self._rngs[i]
            category = self._pick_category(i)
            if rng.random() < self.config.duet_probability:
                partners = self._pick_partners(i, rng)
                kind = "duet" if len(partners) == 1 else "triplet"
                events.append(VocabEvent(tick, i, "WarmUp" if "WarmUp" in
                                         self._categories else category,
                                         kind, partners))
            else:
                events.append(VocabEvent(tick, i, category, "solo"))
            self._due[i] = tick + self._draw_interval(i)
        return events


def idle_vocabulary_schedule(duration_s: float, config: VocabularyConfig,
                             tick_rate_hz: float, seed: int,
                             available: Sequence[str] = ("WarmUp",),
                             ) -> list[VocabEvent]:
    """Offline preview of the scheduler: every event over [0, duration)."""
    scheduler = VocabularyScheduler(config, tick_rate_hz, seed, available)
    events = []
    for tick in range(int(duration_s * tick_rate_hz)):
        events.extend(scheduler.poll(tick, lambda s: True))
    return events


# ---------------------------------------------------------------------------
# selection helpers
# ---------------------------------------------------------------------------

def select_response_sample(matrix: VocalMatrix, voice_part: str, phrase: Phrase,
                           tier: ProximityTier, baseline_technique: str,
                           tie_seed) -> tuple[str, str | None]:
    """Sample id plus technique override for one singer's answer."""
    if tier.technique == WHISPER and matrix.vocabulary.get(WHISPER):
        ids = matrix.vocabulary[WHISPER]
        rng = np.random.default_rng(tie_seed)
        return ids[int(rng.integers(len(ids)))], WHISPER
    technique = tier.technique if tier.technique not in (None, WHISPER) \
        else baseline_technique
    sample = query_matrix(matrix, voice_part, phrase.pitch_hz, phrase.length_s,
                          technique, tie_seed)
    return sample, tier.technique


def pair_sync(plays: dict[int, PlayCommand], pair_of: Mapping[int, int],
              make_partner_play) -> dict[int, PlayCommand]:
    """Add the complementary partner Play for every play missing one.

    Stop/led commands never participate; applying this twice adds nothing.
    """
    out = dict(plays)
    for singer_id in sorted(plays):
        partner = pair_of[singer_id]
        if partner not in out:
            cmd = make_partner_play(partner)
            if cmd is not None:
                out[partner] = cmd
    return out


# ---------------------------------------------------------------------------
# singer state and the ensemble machine
# ---------------------------------------------------------------------------

@dataclass
class SingerState:
    active: bool = False
    current_sample: str | None = None
    sample_pos: int = 0
    sample_len: int = 0
    last_bucket: int = 10
    led_pattern: LedPattern = LedPattern.OFF
    led_rate_hz: float = 0.0
    rng: np.random.Generator | None = None


class Ensemble:
    def __init__(
        self,
        singers: Sequence[SingerConfig],
        matrix: VocalMatrix,
        playlists: PlaylistAssignment,
        rules: Sequence[ScenarioRule] = DEFAULT_RULES,
        tiers: Sequence[ProximityTier] = DEFAULT_TIERS,
        vocabulary: VocabularyConfig | None = None,
        mode: Mode = Mode.LIVE,
        sample_rate_hz: int = 48_000,
        samples_per_tick: int = 512,
        hop: int = 512,
        seed: int = 0,
        phrase_offset_hops: int = 8,
    ):
        validate_roster(singers)
        self.singers = sorted(singers, key=lambda s: s.singer_id)
        self.matrix = matrix
        self.playlists = playlists
        self.rules = tuple(rules)
        self.tiers = validate_tiers(tiers)
        self.vocabulary = vocabulary or VocabularyConfig()
        self.mode = mode
        self.sample_rate_hz = sample_rate_hz
        self.samples_per_tick = samples_per_tick
        self.seed = seed
        self.tick_rate_hz = sample_rate_hz / samples_per_tick

        self.pair_of = {s.singer_id: s.pair_id for s in self.singers}
        self._phrase_tracker = PhraseTracker(hop / sample_rate_hz, phrase_offset_hops)
        self._phrase_count = 0
        self.states = [
            SingerState(rng=np.random.default_rng(
                np.random.SeedSequence([seed, 101, s.rng_seed])))
            for s in self.singers
        ]
        self._durations = {
            sid: max(1, int(round(s.duration_s * sample_rate_hz)))
            for sid, s in matrix.samples.items() if s.duration_s
        }
        self._scheduler = VocabularyScheduler(
            self.vocabulary, self.tick_rate_hz, seed,
            available=sorted(matrix.vocabulary),
            relation_bias_of=lambda i: self.singers[i].singer_type.relation_bias)
        self._pending: list[tuple[int, int, str]] = []  # (due_tick, singer, category)
        self._provoked_below: list[bool] = [False] * N_SINGERS

    # -- helpers ----------------------------------------------------------

    def _tier(self, singer_id: int) -> ProximityTier:
        return proximity_modulate(self.states[singer_id].last_bucket, self.tiers)

    def _tie_seed(self, singer_id: int, draw: int):
        return (self.seed, singer_id, draw)

    def _vocab_sample(self, singer_id: int, category: str) -> str | None:
        ids = self.matrix.vocabulary.get(category)
        if not ids:
            return None
        rng = self.states[singer_id].rng
        return ids[int(rng.integers(len(ids)))]

    def _vocab_category(self, singer_id: int) -> str:
        available = [c for c, w in self.vocabulary.weights
                     if w > 0 and self.matrix.vocabulary.get(c)]
        if not available:
            available = sorted(self.matrix.vocabulary)
        weights = dict(self.vocabulary.weights)
        p = np.array([weights.get(c, 0.0) for c in available])
        p = p / p.sum() if p.sum() > 0 else None
        rng = self.states[singer_id].rng
        return available[int(rng.choice(len(available), p=p))]

    def is_idle(self, singer_id: int) -> bool:
        return not self.states[singer_id].active

    # -- mode and sensors --------------------------------------------------

    def set_mode(self, mode: Mode) -> list[EnsembleCommand]:
        """Switch modality; any ongoing playback stops."""
        if mode == self.mode:
            return []
        self.mode = mode
        commands: list[EnsembleCommand] = []
        for i, st in enumerate(self.states):
            if st.active:
                st.active = False
                st.current_sample = None
                st.sample_pos = 0
                st.sample_len = 0
                commands.append(StopCommand(i))
        return commands

    def _update_buckets(self, frame: SensorFrame) -> list[int]:
        """Apply a sensor frame; returns singers provoked this frame."""
        threshold = self.vocabulary.provocation_bucket
        provoked = []
        for i, reading in enumerate(frame.readings):
            st = self.states[i]
            st.last_bucket = reading.bucket
            below = reading.bucket <= threshold
            if below and not self._provoked_below[i]:
                provoked.append(i)
            self._provoked_below[i] = below
        return provoked

    # -- responses ---------------------------------------------------------

    def _match_rule(self, phrase: Phrase) -> ScenarioRule | None:
        buckets = [st.last_bucket for st in self.states]
        for rule in self.rules:
            if self.mode.value not in rule.modes:
                continue
            lo, hi = rule.pitch_range_hz
            if not lo <= phrase.pitch_hz <= hi:
                continue
            lo, hi = rule.volume_range_dbfs
            if not lo <= phrase.peak_volume_dbfs <= hi:
                continue
            if rule.attack_in is not None:
                wanted = {Attack(a) for a in rule.attack_in}
                if not wanted & phrase.attacks:
                    continue
            if rule.max_bucket_any is not None and min(buckets) > rule.max_bucket_any:
                continue
            return rule
        return None

    def _rule_targets(self, rule: ScenarioRule) -> list[int]:
        action = rule.action
        if action.kind == "respond_all":
            return list(range(N_SINGERS))
        if action.kind == "respond_group":
            return [s.singer_id for s in self.singers
                    if s.voice_part == action.group]
        # respond_pair: the singer nearest the audience plus its counterpart
        buckets = [st.last_bucket for st in self.states]
        ranges = [(b, i) for i, b in enumerate(buckets)]
        nearest = min(ranges)[1]
        return sorted({nearest, self.pair_of[nearest]})

    def _response_play(self, singer_id: int, phrase: Phrase,
                       action: RuleAction) -> PlayCommand:
        tier = self._tier(singer_id)
        part = self.playlists.part_of[singer_id]
        sample, override = select_response_sample(
            self.matrix, part, phrase, tier, action.technique,
            self._tie_seed(singer_id, self._phrase_count))
        return PlayCommand(singer_id, sample, tier.gain, override)

    def _respond(self, phrase: Phrase, rule: ScenarioRule) -> dict[int, PlayCommand]:
        plays = {i: self._response_play(i, phrase, rule.action)
                 for i in self._rule_targets(rule)}
        if rule.action.pair_enabled:
            plays = pair_sync(plays, self.pair_of,
                              lambda p: self._response_play(p, phrase, rule.action))
        return plays

    def _vocab_play(self, singer_id: int, category: str) -> PlayCommand | None:
        sample = self._vocab_sample(singer_id, category)
        if sample is None:
            return None
        tier = self._tier(singer_id)
        return PlayCommand(singer_id, sample, tier.gain, None)

    # -- the tick ----------------------------------------------------------

    def tick(self, features: Sequence[VocalFeatures], sensors: SensorFrame | None,
             tick: int, allow_starts: bool = True) -> TickResult:
        commands: list[EnsembleCommand] = []
        events: list[dict] = []
        plays: dict[int, PlayCommand] = {}

        provoked = self._update_buckets(sensors) if sensors is not None else []

        phrase = None
        for f in features:
            done = self._phrase_tracker.push(f)
            if done is not None:
                phrase = done

        if phrase is not None and allow_starts:
            self._phrase_count += 1
            rule = self._match_rule(phrase)
            if rule is not None:
                events.append({
                    "type": "phrase", "tick": tick, "rule": rule.rule_id,
                    "pitch_hz": round(phrase.pitch_hz, 4),
                    "length_s": round(phrase.length_s, 6),
                    "peak_volume_dbfs": round(phrase.peak_volume_dbfs, 3),
                })
                plays.update(self._respond(phrase, rule))

        if self.mode is Mode.INSTALLATION and allow_starts:
            for singer_id in provoked:
                st = self.states[singer_id]
                answers = st.rng.random() < \
                    self.singers[singer_id].singer_type.interaction_likelihood
                events.append({"type": "provocation", "tick": tick,
                               "singer": singer_id, "answered": bool(answers)})
                if answers and not st.active and singer_id not in plays:
                    cmd = self._vocab_play(singer_id, self._vocab_category(singer_id))
                    if cmd is not None:
                        plays[singer_id] = cmd

            for event in self._scheduler.poll(tick, self.is_idle):
                if event.singer_id in plays:
                    continue
                cmd = self._vocab_play(event.singer_id, event.category)
                if cmd is None:
                    continue
                plays[event.singer_id] = cmd
                events.append({"type": "idle_event", "tick": tick,
                               "singer": event.singer_id, "kind": event.kind,
                               "category": event.category,
                               "partners": list(event.partners)})
                stagger = int(round(self.vocabulary.duet_stagger_s * self.tick_rate_hz))
                for k, partner in enumerate(event.partners):
                    self._pending.append((tick + (k + 1) * stagger, partner,
                                          event.category))

            still_pending = []
            for due, singer_id, category in self._pending:
                if due <= tick and singer_id not in plays:
                    cmd = self._vocab_play(singer_id, category)
                    if cmd is not None and not self.states[singer_id].active:
                        plays[singer_id] = cmd
                elif due > tick:
                    still_pending.append((due, singer_id, category))
            self._pending = still_pending

            for i, cfg in enumerate(self.singers):
                p = cfg.singer_type.activity_level
                if p <= 0.0 or not self.is_idle(i) or i in plays:
                    continue
                if self.states[i].rng.random() < p:
                    cmd = self._vocab_play(i, self._vocab_category(i))
                    if cmd is not None:
                        plays[i] = cmd

        for singer_id in sorted(plays):
            cmd = plays[singer_id]
            assert cmd.sample_id in self.playlists.playlist(singer_id), \
                f"sample {cmd.sample_id} not in singer {singer_id}'s playlist"
            st = self.states[singer_id]
            st.active = True
            st.current_sample = cmd.sample_id
            st.sample_pos = 0
            st.sample_len = self._durations[cmd.sample_id]
            commands.append(cmd)

        commands.extend(self._advance_and_update_leds(plays))
        return TickResult(tuple(commands), tuple(events))

    def _advance_and_update_leds(self, started: dict) -> list[EnsembleCommand]:
        out: list[EnsembleCommand] = []
        for i, st in enumerate(self.states):
            if st.active and i not in started:
                st.sample_pos += self.samples_per_tick
                if st.sample_pos >= st.sample_len:
                    st.active = False
                    st.current_sample = None
                    st.sample_pos = 0
                    st.sample_len = 0
            if st.active:
                rate = pulse_rate_hz(st.last_bucket)
                if st.led_pattern is not LedPattern.PULSE or st.led_rate_hz != rate:
                    st.led_pattern = LedPattern.PULSE
                    st.led_rate_hz = rate
                    out.append(SetLedCommand(i, LedPattern.PULSE, rate))
            elif st.led_pattern is not LedPattern.OFF:
                st.led_pattern = LedPattern.OFF
                st.led_rate_hz = 0.0
                out.append(SetLedCommand(i, LedPattern.OFF, 0.0))
        return out
