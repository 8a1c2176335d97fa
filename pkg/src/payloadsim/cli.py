"""Command line front end: run, report, serve, passgen, inject, encode, decode.

Exit codes: 0 success, 2 configuration problem (bad scenario, bad flags),
3 runtime failure.
"""
import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import codec
from .errors import ConfigError, PayloadSimError
from .missioncli import (MissionEngine, default_scenario, format_summary,
                         load_scenario, scenario_windows, summarize)
from .missioncli.server import ConsoleServer


def _scenario_from_args(args) -> "Scenario":
    if getattr(args, "scenario", None):
        scn = load_scenario(args.scenario)
    else:
        scn = default_scenario()
    if getattr(args, "days", None) is not None:
        scn = replace(scn, duration_days=args.days)
    if getattr(args, "seed", None) is not None:
        scn = replace(scn, master_seed=args.seed)
    return scn


def _cmd_run(args) -> int:
    scn = _scenario_from_args(args)
    report = MissionEngine(scn).run()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(report.to_json_dict(), indent=2) + "\n")
        (out / "mission.log").write_text(
            "\n".join(report.log_lines()) + "\n")
        print(f"wrote {out / 'report.json'} and {out / 'mission.log'}")
    print(report.to_text())
    return 0


def _cmd_report(args) -> int:
    try:
        lines = Path(args.log).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read log: {exc}") from exc
    summary, warnings = summarize(lines)
    print(format_summary(summary, warnings))
    if args.out:
        Path(args.out).write_text(json.dumps(
            {"summary": summary, "warnings": warnings}, indent=2) + "\n")
    return 0


def _cmd_serve(args) -> int:
    scn = _scenario_from_args(args)
    host, _, port = args.addr.rpartition(":")
    try:
        port = int(port)
    except ValueError as exc:
        raise ConfigError(f"bad --addr {args.addr!r}") from exc
    console = ConsoleServer(scn, static_dir=args.static)
    if args.demo:
        console.demo_setup(days=args.demo_days)
    try:
        console.serve_forever(host or "127.0.0.1", port)
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_passgen(args) -> int:
    scn = _scenario_from_args(args)
    print(f"pass windows for day {args.day}")
    for w in scenario_windows(scn, args.day):
        print(f"  {w.start.isoformat()}  {w.channel:<6} {w.duration_s:6.0f} s")
    return 0


def _cmd_inject(args) -> int:
    scn = _scenario_from_args(args)
    see = replace(scn.see,
                  base_rate_per_orbit=scn.see.base_rate_per_orbit * args.rate)
    scn = replace(scn, see=see)
    report = MissionEngine(scn).run()
    faults = sum(d.faults for d in report.days)
    restored = sum(d.copies_restored for d in report.days)
    unrec = report.days[-1].unrecoverable
    print(f"rate x{args.rate}: {faults} upsets, {restored} copies restored, "
          f"{unrec} unrecoverable after {scn.duration_days} day(s)")
    return 0


def _load_image(path: str) -> np.ndarray:
    p = Path(path)
    if p.suffix == ".npy":
        return np.load(p)
    from PIL import Image
    return np.asarray(Image.open(p))


def _cmd_encode(args) -> int:
    img = _load_image(args.input)
    stream = codec.encode(img, quality=args.quality, lossless=args.lossless)
    Path(args.out).write_bytes(stream)
    kind = "lossless" if args.lossless else f"q{args.quality}"
    print(f"{args.input} -> {args.out}: {len(stream)} bytes ({kind})")
    return 0


def _cmd_decode(args) -> int:
    stream = Path(args.input).read_bytes()
    if args.segments is not None:
        hdr = codec.parse_header(stream)
        if not 1 <= args.segments <= hdr.segment_count:
            raise ConfigError(
                f"--segments outside 1..{hdr.segment_count}")
        end = hdr.header_size + sum(hdr.segment_lengths[:args.segments])
        stream = stream[:end]
    img = codec.decode(stream).to_array()
    out = Path(args.out)
    if out.suffix == ".npy":
        np.save(out, img)
    else:
        from PIL import Image
        Image.fromarray(img).save(out)
    print(f"{args.input} -> {out}: {img.shape} decoded")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="payloadsim",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, days=True):
        p.add_argument("--scenario", help="scenario file (yaml)")
        p.add_argument("--seed", type=int, help="override master seed")
        if days:
            p.add_argument("--days", type=int, help="override duration")

    p = sub.add_parser("run", help="run a mission and print the report")
    common(p)
    p.add_argument("--out", help="directory for report.json and mission.log")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="summarize an event log")
    p.add_argument("log", help="mission.log path")
    p.add_argument("--out", help="write summary json here")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="serve the operator console API")
    common(p)
    p.add_argument("--addr", default="127.0.0.1:8099", help="host:port")
    p.add_argument("--static", help="static bundle directory")
    p.add_argument("--demo", action="store_true",
                   help="pre-run history and rig a repairable fault")
    p.add_argument("--demo-days", type=int, default=2)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("passgen", help="list contact windows for a day")
    common(p, days=False)
    p.add_argument("--day", type=int, default=0)
    p.set_defaults(func=_cmd_passgen)

    p = sub.add_parser("inject", help="run with a scaled upset rate")
    common(p)
    p.add_argument("--rate", type=float, default=10.0,
                   help="multiplier on the base upset rate")
    p.set_defaults(func=_cmd_inject)

    p = sub.add_parser("encode", help="compress an image file")
    p.add_argument("input", help=".npy or image file")
    p.add_argument("--out", required=True, help="output stream path")
    p.add_argument("--quality", type=int, default=75)
    p.add_argument("--lossless", action="store_true")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="decompress a stream file")
    p.add_argument("input", help="stream path")
    p.add_argument("--out", required=True, help=".npy or image output path")
    p.add_argument("--segments", type=int,
                   help="decode only the first N segments")
    p.set_defaults(func=_cmd_decode)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PayloadSimError, OSError, ValueError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
