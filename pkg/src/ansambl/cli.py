"""Command-line entry point: calibration, dataset tooling, offline
rendering, live running, and the simulated installation.

Exit codes are stable: 0 success, 2 invalid input or configuration,
3 calibration failed. Every subcommand takes --json for machine-readable
output. ANSAMBL_LOG sets the log level.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .errors import AnsamblError, CalibrationError, ConfigError

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CALIBRATION = 3


def _emit(args, payload: dict, human: str | None = None) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    elif human:
        print(human)


def _load_calibration_corpus(corpus_dir: Path):
    from .errors import InvalidInputError
    from .wav_io import read_mono

    manifest = corpus_dir / "manifest.json"
    if not manifest.exists():
        raise InvalidInputError(f"no manifest.json in {corpus_dir}")
    doc = json.loads(manifest.read_text())
    clips: dict[str, list] = {}
    for entry in doc.get("clips", []):
        x, _ = read_mono(corpus_dir / entry["path"], target_rate=48_000)
        clips.setdefault(entry["label"], []).append(x)
    return clips


def cmd_calibrate(args) -> int:
    from .vocal_analysis import AnalysisConfig, build_voice_profile

    clips = _load_calibration_corpus(Path(args.corpus))
    try:
        profile, report = build_voice_profile(clips, AnalysisConfig())
    except CalibrationError as exc:
        _emit(args, {"ok": False, "error": str(exc),
                     "achieved_rate": exc.achieved_rate,
                     "per_label": exc.per_label},
              f"calibration failed: {exc}")
        return EXIT_CALIBRATION
    profile.save(args.out)
    payload = {
        "ok": True, "profile": str(args.out),
        "separability": report.separability,
        "false_reject_rate": report.false_reject_rate,
        "rejection_rates": report.rejection_rates,
        "hop_counts": report.hop_counts,
    }
    _emit(args, payload,
          f"profile written to {args.out}\n"
          f"separability {report.separability:.3f} "
          f"(false-reject {report.false_reject_rate:.3f}, "
          f"rejections {report.rejection_rates})")
    return EXIT_OK


def cmd_render(args) -> int:
    from .config import load_config
    from .engine import render_offline

    config = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")
        config.seed = args.seed
    trace = args.trace or str(Path(args.out).with_suffix(".ndjson"))
    result = render_offline(config, args.performer, args.script, args.out, trace)
    payload = {
        "ok": True, "out": str(result.out_path), "trace": str(result.trace_path),
        "blocks": result.blocks, "duration_s": result.duration_s,
        "seed": config.seed,
    }
    _emit(args, payload,
          f"rendered {result.duration_s:.2f} s ({result.blocks} blocks) "
          f"-> {result.out_path} (+{result.trace_path})")
    return EXIT_OK


def cmd_live(args) -> int:
    from .bridge import LiveHost, serve
    from .config import load_config
    from .engine import (CaptureSink, NullSink, SoundDeviceSink, prepare_session,
                         run_realtime, silence_blocks, wav_input_blocks,
                         write_trace)
    from .wav_io import write_float32

    config = load_config(args.config)
    engine = prepare_session(config)
    sr = config.analysis.sample_rate_hz
    block = config.render.block_size

    if args.input:
        blocks = wav_input_blocks(args.input, sr, block, args.duration)
    else:
        blocks = silence_blocks(sr, block, args.duration or 60.0)

    if args.sink == "device":
        channels = 2 if args.downmix_stereo else 16
        sink = SoundDeviceSink(sr, channels, block)
    elif args.sink == "capture":
        sink = CaptureSink()
    else:
        sink = NullSink()

    host = None
    server = None
    led_out = None
    if args.listen:
        host = LiveHost()
        server = serve(host, args.listen, config.bridge.snapshot_hz)
        log.info("bridge listening on %s", args.listen)
    if args.led_out:
        from .led_control import LedSerialOutput

        led_transport = open(args.led_out, "ab")
        led_out = LedSerialOutput(engine.snapshot, led_transport).start()
    report = None
    try:
        report = run_realtime(engine, blocks, sink,
                              downmix_stereo=args.downmix_stereo,
                              pace=args.pace, host=host)
    except KeyboardInterrupt:
        log.info("interrupted; flushing")
    finally:
        # ordered shutdown: audio stopped above, then control, then network
        if led_out is not None:
            led_out.stop()
        if server is not None:
            server.stop()
        if args.trace:
            write_trace(engine.trace, args.trace)
        if args.loop_export:
            exported = engine.export_loop_session(
                args.loop_export + ".wav", args.loop_export + ".json")
            if exported:
                log.info("loop session exported to %s.{wav,json}",
                         args.loop_export)
        if args.capture_out and isinstance(sink, CaptureSink):
            write_float32(args.capture_out, sink.output().T, sr)
    if report is None:
        m = engine.metrics
        report_dict = {"blocks": m.blocks_rendered, "interrupted": True,
                       "missed_deadlines": m.missed_deadlines}
    else:
        report_dict = report.to_dict()
    payload = {"ok": True, **report_dict}
    _emit(args, payload,
          f"{payload.get('blocks')} blocks, "
          f"{payload.get('missed_deadlines')} missed deadlines, "
          f"mean block {payload.get('mean_block_time_ms', 0):.3f} ms of "
          f"{payload.get('deadline_ms', 0):.2f} ms deadline")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .bridge import SimulationHost, serve
    from .config import load_config
    from .engine import ScriptPlayer, load_script, prepare_session, write_trace

    config = load_config(args.config)
    if args.mode:
        from .ensemble import Mode

        config.mode = Mode(args.mode)
    engine = prepare_session(config)
    sr = config.analysis.sample_rate_hz
    max_ticks = None
    if args.duration:
        max_ticks = int(args.duration * sr / config.render.block_size)
    script = ScriptPlayer(load_script(args.script), sr) if args.script else None
    host = SimulationHost(engine, virtual_clock=args.virtual_clock,
                          render_audio=False, max_ticks=max_ticks,
                          script=script)
    server = serve(host, args.listen, config.bridge.snapshot_hz) \
        if args.listen else None
    host.start()
    try:
        host.join()
    except KeyboardInterrupt:
        host.stop()
    finally:
        if server is not None:
            server.stop()
    if args.trace:
        write_trace(engine.trace, args.trace)
    snap = engine.snapshot()
    payload = {"ok": True, "ticks": snap.tick,
               "duration_s": snap.tick * config.render.block_size / sr,
               "trace": args.trace}
    _emit(args, payload, f"simulated {payload['duration_s']:.1f} s "
                         f"({snap.tick} ticks)")
    return EXIT_OK


def cmd_dataset(args) -> int:
    from .sample_library import (ingest_manifest, load_manifest, save_manifest,
                                 validate_manifest)

    manifest = Path(args.manifest)
    if args.action == "validate":
        report = validate_manifest(manifest)
        payload = {"ok": report.ok, "counts": report.counts,
                   "findings": [{"kind": f.kind, "message": f.message,
                                 "sample": f.sample_id} for f in report.findings]}
        lines = [f"{f.kind}: {f.message}" +
                 (f" (sample {f.sample_id})" if f.sample_id else "")
                 for f in report.findings]
        _emit(args, payload, "\n".join(lines) if lines else
              f"manifest clean: {report.counts['samples']} samples")
        return EXIT_OK if report.ok else EXIT_INVALID

    if args.action == "build":
        report = validate_manifest(manifest)
        blocking = [f for f in report.findings
                    if f.kind in ("missing-file", "duplicate-id")]
        if blocking:
            _emit(args, {"ok": False,
                         "findings": [f.message for f in blocking]},
                  "\n".join(f.message for f in blocking))
            return EXIT_INVALID
        samples = ingest_manifest(load_manifest(manifest), manifest.parent)
        save_manifest(samples, manifest)
        unpitched = [s.id for s in samples if s.unpitched and s.is_performance]
        payload = {"ok": True, "samples": len(samples),
                   "unpitched_performance": unpitched}
        _emit(args, payload,
              f"measured {len(samples)} samples"
              + (f"; unpitched performance: {unpitched}" if unpitched else ""))
        return EXIT_OK

    # stats
    report = validate_manifest(manifest)
    samples = load_manifest(manifest)
    durations = [s.duration_s for s in samples if s.duration_s]
    payload = {
        "ok": True, "counts": report.counts,
        "total_duration_s": round(sum(durations), 3) if durations else None,
        "measured": sum(1 for s in samples if s.duration_s is not None),
    }
    _emit(args, payload, json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ansambl",
        description="sixteen-voice interactive vocal ensemble engine")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("calibrate", help="build a sing/speak gate profile")
    c.add_argument("corpus", help="directory with labeled clips + manifest.json")
    c.add_argument("--out", required=True, help="profile JSON output path")
    c.add_argument("--json", action="store_true")
    c.set_defaults(fn=cmd_calibrate)

    r = sub.add_parser("render", help="deterministic offline render")
    r.add_argument("--config", required=True)
    r.add_argument("--performer", required=True, help="mono performer WAV")
    r.add_argument("--script", help="sensor/control script JSON")
    r.add_argument("--out", required=True, help="16-channel WAV output")
    r.add_argument("--trace", help="command trace path (default: out.ndjson)")
    r.add_argument("--seed", type=int)
    r.add_argument("--json", action="store_true")
    r.set_defaults(fn=cmd_render)

    l = sub.add_parser("live", help="real-time engine")
    l.add_argument("--config", required=True)
    l.add_argument("--input", help="performer WAV looped as live input "
                                   "(default: silence)")
    l.add_argument("--duration", type=float, help="seconds to run")
    l.add_argument("--downmix-stereo", action="store_true")
    l.add_argument("--sink", choices=("null", "capture", "device"),
                   default="null")
    l.add_argument("--capture-out", help="write captured output WAV")
    l.add_argument("--trace", help="write the command trace here on exit")
    l.add_argument("--loop-export",
                   help="path prefix for the loop session WAV + JSON on exit")
    l.add_argument("--led-out",
                   help="file/device receiving LED serial frames at 30 Hz")
    l.add_argument("--pace", action="store_true",
                   help="sleep to wall-clock rate instead of free-running")
    l.add_argument("--listen", help="serve the bridge on addr:port")
    l.add_argument("--json", action="store_true")
    l.set_defaults(fn=cmd_live)

    s = sub.add_parser("simulate", help="installation simulation (no audio out)")
    s.add_argument("--config", required=True)
    s.add_argument("--script", help="scripted avatar timeline JSON")
    s.add_argument("--virtual-clock", action="store_true",
                   help="free-run faster than real time")
    s.add_argument("--duration", type=float, help="simulated seconds")
    s.add_argument("--mode", choices=("live", "installation"))
    s.add_argument("--trace", help="write the command trace here on exit")
    s.add_argument("--listen", help="serve the bridge on addr:port")
    s.add_argument("--json", action="store_true")
    s.set_defaults(fn=cmd_simulate)

    d = sub.add_parser("dataset", help="sample manifest tooling")
    d.add_argument("action", choices=("build", "validate", "stats"))
    d.add_argument("--manifest", required=True)
    d.add_argument("--json", action="store_true")
    d.set_defaults(fn=cmd_dataset)

    return p


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("ANSAMBL_LOG", "WARNING").upper(),
        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except AnsamblError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
