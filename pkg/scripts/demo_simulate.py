#!/usr/bin/env python3
"""Run the installation simulation with the bridge serving the operator
console, until interrupted.

Usage: python scripts/make_fixtures.py && python scripts/demo_simulate.py
Then open frontend/index.html (served) or connect any WebSocket client to
ws://127.0.0.1:8765/state.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from ansambl.cli import main as cli_main


def main() -> int:
    base = Path("fixtures")
    if not (base / "config.json").exists():
        print("run scripts/make_fixtures.py first", file=sys.stderr)
        return 2
    return cli_main([
        "simulate", "--config", str(base / "config.json"),
        "--mode", "installation",
        "--listen", "127.0.0.1:8765",
    ])


if __name__ == "__main__":
    raise SystemExit(main())
