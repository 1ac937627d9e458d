#!/usr/bin/env python3
"""Render the demo session end to end and summarize what the choir did.

Usage: python scripts/make_fixtures.py && python scripts/demo_render.py
"""
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from ansambl.config import load_config
from ansambl.engine import render_offline


def main() -> int:
    base = Path("fixtures")
    if not (base / "config.json").exists():
        print("run scripts/make_fixtures.py first", file=sys.stderr)
        return 2
    config = load_config(base / "config.json")
    result = render_offline(config, base / "song.wav", base / "script.json",
                            "demo_out.wav", "demo_out.ndjson")
    print(f"rendered {result.duration_s:.1f} s -> demo_out.wav")

    plays = phrases = 0
    overrides = {}
    for line in open("demo_out.ndjson"):
        rec = json.loads(line)
        if rec.get("type") != "tick":
            continue
        phrases += sum(1 for e in rec["events"] if e["type"] == "phrase")
        for c in rec["commands"]:
            if c["op"] == "play":
                plays += 1
                overrides[c["override"]] = overrides.get(c["override"], 0) + 1
    print(f"{phrases} phrases answered with {plays} sample plays")
    print(f"technique overrides seen: {overrides}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
