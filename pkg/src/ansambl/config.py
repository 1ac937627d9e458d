"""Engine configuration document: one commented-JSON file wiring every
subsystem, loaded into typed dataclasses with path-precise diagnostics.

Comments (// and /* */) are stripped in a preprocessing pass so the same
parser serves the engine, the tests, and UI tooling.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .ensemble import (
    DEFAULT_RULES,
    DEFAULT_TIERS,
    Mode,
    ProximityTier,
    RuleAction,
    ScenarioRule,
    SINGER_TYPE_PRESETS,
    SingerConfig,
    SingerType,
    VocabularyConfig,
    default_singers,
    validate_roster,
    validate_tiers,
)
from .errors import ConfigError
from .looper import SegmentConstraints
from .render import ChannelLayout, RenderConfig
from .sample_library import BucketConfig
from .sensor_io import QuantizerConfig, SmoothingConfig
from .vocal_analysis import AnalysisConfig, AttackConfig

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SensorSettings:
    source: str = "simulated"             # simulated | serial
    quantizer: QuantizerConfig = field(default_factory=QuantizerConfig)
    rate_hz: float = 10.0
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    sim_radius_m: float = 3.0
    sim_noise_mm: float = 0.0
    serial_port: str | None = None


@dataclass(frozen=True)
class LoopSettings:
    constraints: SegmentConstraints = field(default_factory=SegmentConstraints)
    echo_delay_ms: float = 120.0
    echo_gain_decay: float = 0.8
    hold_ticks: int = 5
    watermark_mb: float = 512.0
    sung_cue_pitch_hz: float | None = None   # sustained-pitch arm toggle
    sung_cue_hold_s: float = 1.0


@dataclass(frozen=True)
class BridgeSettings:
    listen: str = "127.0.0.1:8765"
    snapshot_hz: float = 20.0


@dataclass
class EngineConfig:
    mode: Mode = Mode.LIVE
    seed: int = 0
    manifest_path: Path | None = None
    profile_path: Path | None = None
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    buckets: BucketConfig = field(default_factory=BucketConfig)
    singers: list[SingerConfig] = field(default_factory=default_singers)
    rules: tuple[ScenarioRule, ...] = DEFAULT_RULES
    tiers: tuple[ProximityTier, ...] = DEFAULT_TIERS
    vocabulary: VocabularyConfig = field(default_factory=VocabularyConfig)
    sensors: SensorSettings = field(default_factory=SensorSettings)
    loop: LoopSettings = field(default_factory=LoopSettings)
    render: RenderConfig = field(default_factory=RenderConfig)
    layout: ChannelLayout = field(default_factory=ChannelLayout)
    bridge: BridgeSettings = field(default_factory=BridgeSettings)

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")
        if any(s.rng_seed < 0 for s in self.singers):
            raise ConfigError("singers", "rng seeds must be non-negative")
        validate_roster(self.singers)
        self.tiers = validate_tiers(self.tiers)
        if self.render.sample_rate_hz != self.analysis.sample_rate_hz:
            raise ConfigError("render.sample_rate_hz",
                              "must equal analysis.sample_rate_hz")
        if self.render.block_size % self.analysis.hop != 0:
            raise ConfigError("render.block_size",
                              f"must be a multiple of the analysis hop "
                              f"({self.analysis.hop})")

    @property
    def grouping(self) -> dict[str, tuple[int, ...]]:
        out: dict[str, list[int]] = {"First": [], "Second": []}
        for s in self.singers:
            out[s.voice_part].append(s.singer_id)
        return {p: tuple(ids) for p, ids in out.items()}


# ---------------------------------------------------------------------------
# comment stripping
# ---------------------------------------------------------------------------

def strip_json_comments(text: str) -> str:
    """Remove // and /* */ comments outside of string literals."""
    out = []
    i = 0
    n = len(text)
    in_string = False
    while i < n:
        c = text[i]
        if in_string:
            out.append(c)
            if c == "\\" and i + 1 < n:
                out.append(text[i + 1])
                i += 2
                continue
            if c == '"':
                in_string = False
            i += 1
        elif c == '"':
            in_string = True
            out.append(c)
            i += 1
        elif c == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
        elif c == "/" and i + 1 < n and text[i + 1] == "*":
            i += 2
            while i + 1 < n and not (text[i] == "*" and text[i + 1] == "/"):
                i += 1
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


# ---------------------------------------------------------------------------
# document -> typed config
# ---------------------------------------------------------------------------

def _expect(doc: dict, path: str, known: set[str]) -> None:
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown field")


def _pair(doc, path, key, default) -> tuple[float, float]:
    v = doc.get(key, default)
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ConfigError(f"{path}.{key}", "expected [min, max]")
    return (float(v[0]), float(v[1]))


def _parse_types(doc: dict) -> dict[str, SingerType]:
    types = dict(SINGER_TYPE_PRESETS)
    for name, body in doc.get("types", {}).items():
        _expect(body, f"types.{name}",
                {"activity_level", "interaction_likelihood", "relation_bias"})
        bias = body.get("relation_bias")
        types[name] = SingerType(
            name=name,
            activity_level=float(body.get("activity_level", 0.0)),
            interaction_likelihood=float(body.get("interaction_likelihood", 0.5)),
            relation_bias=tuple(bias) if bias is not None else None,
        )
    return types


def _parse_singers(doc: dict, types: dict[str, SingerType]) -> list[SingerConfig]:
    if "singers" not in doc:
        return default_singers(int(doc.get("seed", 0)))
    out = []
    for i, body in enumerate(doc["singers"]):
        path = f"singers[{i}]"
        _expect(body, path, {"id", "voice_part", "pair", "type", "seed"})
        for req in ("id", "voice_part", "pair"):
            if req not in body:
                raise ConfigError(f"{path}.{req}", "required field missing")
        type_name = body.get("type", "placid")
        if type_name not in types:
            raise ConfigError(f"{path}.type", f"unknown singer type '{type_name}'")
        out.append(SingerConfig(
            singer_id=int(body["id"]),
            voice_part=str(body["voice_part"]),
            pair_id=int(body["pair"]),
            singer_type=types[type_name],
            rng_seed=int(body.get("seed", body["id"])),
        ))
    return out


def _parse_rules(doc: dict) -> tuple[ScenarioRule, ...]:
    if "scenarios" not in doc:
        return DEFAULT_RULES
    rules = []
    for i, body in enumerate(doc["scenarios"]):
        path = f"scenarios[{i}]"
        _expect(body, path, {"id", "modes", "pitch_range_hz", "volume_range_dbfs",
                             "attack_in", "max_bucket_any", "action"})
        action_body = body.get("action", {})
        _expect(action_body, f"{path}.action",
                {"kind", "group", "technique", "pair_enabled"})
        action = RuleAction(
            kind=action_body.get("kind", "respond_all"),
            group=action_body.get("group"),
            technique=action_body.get("technique", "Belting"),
            pair_enabled=bool(action_body.get("pair_enabled", False)),
        )
        rules.append(ScenarioRule(
            rule_id=str(body.get("id", f"rule-{i}")),
            modes=tuple(body.get("modes", [Mode.LIVE.value])),
            pitch_range_hz=_pair(body, path, "pitch_range_hz", [0.0, 24000.0]),
            volume_range_dbfs=_pair(body, path, "volume_range_dbfs", [-120.0, 0.0]),
            attack_in=tuple(body["attack_in"]) if body.get("attack_in") else None,
            max_bucket_any=body.get("max_bucket_any"),
            action=action,
        ))
    return tuple(rules)


def _parse_tiers(doc: dict) -> tuple[ProximityTier, ...]:
    if "tiers" not in doc:
        return DEFAULT_TIERS
    tiers = []
    for i, body in enumerate(doc["tiers"]):
        _expect(body, f"tiers[{i}]", {"min_bucket", "max_bucket", "technique", "gain"})
        tiers.append(ProximityTier(
            min_bucket=int(body["min_bucket"]),
            max_bucket=int(body["max_bucket"]),
            technique=body.get("technique"),
            gain=float(body.get("gain", 1.0)),
        ))
    return tuple(tiers)


def config_from_dict(doc: dict, base_dir: Path | None = None) -> EngineConfig:
    base_dir = base_dir or Path.cwd()
    _expect(doc, "$", {"schema_version", "mode", "seed", "manifest", "profile",
                       "analysis", "buckets", "types", "singers", "scenarios",
                       "tiers", "vocabulary", "sensors", "loop", "render",
                       "bridge"})
    if doc.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}")

    mode_name = doc.get("mode", "live")
    try:
        mode = Mode(mode_name)
    except ValueError:
        raise ConfigError("mode", f"unknown mode '{mode_name}'") from None

    a = doc.get("analysis", {})
    _expect(a, "analysis", {"sample_rate_hz", "window", "hop", "pitch_min_hz",
                            "pitch_max_hz", "attack"})
    at = a.get("attack", {})
    _expect(at, "analysis.attack", {"band_low_hz", "band_high_hz", "window_hops",
                                    "strong_rise_db", "soft_rise_db"})
    analysis = AnalysisConfig(
        sample_rate_hz=int(a.get("sample_rate_hz", 48_000)),
        window=int(a.get("window", 2048)),
        hop=int(a.get("hop", 512)),
        pitch_min_hz=float(a.get("pitch_min_hz", 60.0)),
        pitch_max_hz=float(a.get("pitch_max_hz", 1500.0)),
        attack=AttackConfig(
            band_low_hz=float(at.get("band_low_hz", 2000.0)),
            band_high_hz=float(at.get("band_high_hz", 6000.0)),
            window_hops=int(at.get("window_hops", 10)),
            strong_rise_db=float(at.get("strong_rise_db", 12.0)),
            soft_rise_db=float(at.get("soft_rise_db", 6.0)),
        ),
    )

    b = doc.get("buckets", {})
    _expect(b, "buckets", {"pitch_edges_hz", "length_edges_s"})
    buckets = BucketConfig(
        pitch_edges_hz=tuple(b.get("pitch_edges_hz", (110.0, 220.0, 440.0, 880.0))),
        length_edges_s=tuple(b.get("length_edges_s", (0.0, 1.0, 3.0, 60.0))),
    )

    v = doc.get("vocabulary", {})
    _expect(v, "vocabulary", {"mean_interval_s", "weights", "duet_probability",
                              "duet_stagger_s", "provocation_bucket"})
    weights = v.get("weights")
    vocabulary = VocabularyConfig(
        mean_interval_s=float(v.get("mean_interval_s", 45.0)),
        weights=tuple((str(k), float(w)) for k, w in weights.items())
        if weights else VocabularyConfig().weights,
        duet_probability=float(v.get("duet_probability", 0.15)),
        duet_stagger_s=float(v.get("duet_stagger_s", 1.2)),
        provocation_bucket=int(v.get("provocation_bucket", 3)),
    )

    s = doc.get("sensors", {})
    _expect(s, "sensors", {"source", "min_range_mm", "max_range_mm", "rate_hz",
                           "median_window", "hold_ticks", "sim", "serial_port"})
    sim = s.get("sim", {})
    _expect(sim, "sensors.sim", {"radius_m", "noise_mm"})
    if s.get("source", "simulated") not in ("simulated", "serial"):
        raise ConfigError("sensors.source", f"unknown source '{s['source']}'")
    sensors = SensorSettings(
        source=s.get("source", "simulated"),
        quantizer=QuantizerConfig(int(s.get("min_range_mm", 300)),
                                  int(s.get("max_range_mm", 5000))),
        rate_hz=float(s.get("rate_hz", 10.0)),
        smoothing=SmoothingConfig(int(s.get("median_window", 3)),
                                  int(s.get("hold_ticks", 2))),
        sim_radius_m=float(sim.get("radius_m", 3.0)),
        sim_noise_mm=float(sim.get("noise_mm", 0.0)),
        serial_port=s.get("serial_port"),
    )

    lo = doc.get("loop", {})
    _expect(lo, "loop", {"min_fraction", "max_fraction", "echo_delay_ms",
                         "echo_gain_decay", "hold_ticks", "watermark_mb",
                         "sung_cue_pitch_hz", "sung_cue_hold_s"})
    loop = LoopSettings(
        constraints=SegmentConstraints(float(lo.get("min_fraction", 0.25)),
                                       float(lo.get("max_fraction", 1.0))),
        echo_delay_ms=float(lo.get("echo_delay_ms", 120.0)),
        echo_gain_decay=float(lo.get("echo_gain_decay", 0.8)),
        hold_ticks=int(lo.get("hold_ticks", 5)),
        watermark_mb=float(lo.get("watermark_mb", 512.0)),
        sung_cue_pitch_hz=lo.get("sung_cue_pitch_hz"),
        sung_cue_hold_s=float(lo.get("sung_cue_hold_s", 1.0)),
    )

    r = doc.get("render", {})
    _expect(r, "render", {"block_size", "master_gain", "limiter_threshold_dbfs",
                          "channel_trims", "angles_deg"})
    render_cfg = RenderConfig(
        sample_rate_hz=analysis.sample_rate_hz,
        block_size=int(r.get("block_size", 512)),
        master_gain=float(r.get("master_gain", 1.0)),
        limiter_threshold_dbfs=float(r.get("limiter_threshold_dbfs", -1.0)),
        channel_trims=tuple(r.get("channel_trims", (1.0,) * 16)),
    )
    layout = ChannelLayout(angles_deg=tuple(r["angles_deg"])) \
        if "angles_deg" in r else ChannelLayout()

    br = doc.get("bridge", {})
    _expect(br, "bridge", {"listen", "snapshot_hz"})
    bridge = BridgeSettings(
        listen=str(br.get("listen", "127.0.0.1:8765")),
        snapshot_hz=float(br.get("snapshot_hz", 20.0)),
    )

    types = _parse_types(doc)

    def resolve(key):
        p = doc.get(key)
        return (base_dir / p) if p else None

    return EngineConfig(
        mode=mode,
        seed=int(doc.get("seed", 0)),
        manifest_path=resolve("manifest"),
        profile_path=resolve("profile"),
        analysis=analysis,
        buckets=buckets,
        singers=_parse_singers(doc, types),
        rules=_parse_rules(doc),
        tiers=_parse_tiers(doc),
        vocabulary=vocabulary,
        sensors=sensors,
        loop=loop,
        render=render_cfg,
        layout=layout,
        bridge=bridge,
    )


def load_config(path: str | Path) -> EngineConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    try:
        doc = json.loads(strip_json_comments(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}", f"invalid JSON: {exc.msg}") from exc
    return config_from_dict(doc, path.parent)


def default_config_doc(manifest: str, profile: str | None = None,
                       mode: str = "live", seed: int = 0) -> dict:
    """A complete, commented-out-free document for `ansambl` to consume."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "seed": seed,
        "manifest": manifest,
    }
    if profile:
        doc["profile"] = profile
    return doc
