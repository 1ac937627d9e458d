#!/usr/bin/env python3
"""Build a complete desk-scale session under ./fixtures: synthetic sample
corpus (~120 clips), calibration corpus + gate profile, a demo song, a
demo avatar script, and an engine config wired to all of them.

Usage: python scripts/make_fixtures.py [--dest fixtures] [--seed 11]
"""
import argparse
import json
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from ansambl import fixtures
from ansambl.sample_library import ingest_manifest, load_manifest, save_manifest
from ansambl.vocal_analysis import AnalysisConfig, build_voice_profile
from ansambl.wav_io import write_mono_pcm16


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--dest", default="fixtures")
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--per-cell", type=int, default=2,
                    help="samples per matrix cell (2 gives ~120 clips)")
    args = ap.parse_args()
    dest = Path(args.dest)

    corpus = dest / "samples"
    print(f"synthesizing sample corpus in {corpus} ...")
    manifest = fixtures.write_sample_corpus(corpus, per_cell=args.per_cell,
                                            seed=args.seed)
    print("measuring (dataset build) ...")
    measured = ingest_manifest(load_manifest(manifest), corpus)
    save_manifest(measured, manifest)
    print(f"  {len(measured)} samples measured")

    calib = dest / "calibration"
    print(f"writing calibration corpus in {calib} ...")
    fixtures.write_calibration_corpus(calib, n_per_label=4, seed=args.seed)
    profile, report = build_voice_profile(
        fixtures.make_calibration_clips(4, seed=args.seed), AnalysisConfig())
    profile_path = dest / "profile.json"
    profile.save(profile_path)
    print(f"  separability {report.separability:.3f} -> {profile_path}")

    song = fixtures.make_song([(205.0, 0.8), (313.0, 1.6), (627.0, 0.8),
                               (313.0, 3.5)], gap_s=1.5, amplitude=0.5)
    song_path = dest / "song.wav"
    write_mono_pcm16(song_path, song, 48_000)
    print(f"demo song -> {song_path}")

    angle = math.radians(360.0 * 3 / 16)
    script = fixtures.sensor_script([
        (4.0, [(0.35 * math.cos(angle), 0.35 * math.sin(angle))]),
        (9.0, [(3.0 * math.cos(angle), 3.0 * math.sin(angle))]),
    ])
    script_path = dest / "script.json"
    script_path.write_text(json.dumps(script, indent=2))
    print(f"avatar script -> {script_path}")

    config = {
        "schema_version": 1,
        "mode": "live",
        "seed": args.seed,
        "manifest": "samples/manifest.json",
        "profile": "profile.json",
    }
    config_path = dest / "config.json"
    config_path.write_text(json.dumps(config, indent=2) + "\n")
    print(f"engine config -> {config_path}")
    print("\ntry:")
    print(f"  ansambl render --config {config_path} --performer {song_path} "
          f"--script {script_path} --out out.wav")
    print(f"  ansambl simulate --config {config_path} --mode installation "
          f"--listen 127.0.0.1:8765")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
