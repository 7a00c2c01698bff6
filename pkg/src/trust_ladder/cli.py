"""Headless entry point: run a mission, verify a replay, convert artifacts,
or serve the command/telemetry gateway.

Exit codes: 0 success, 1 verification failure, 2 usage error. The default
output directory comes from TRUST_LADDER_OUT when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import sim
from .scenario import ScenarioError, load_scenario


def _default_out() -> str:
    return os.environ.get("TRUST_LADDER_OUT", "out")


def _load_commands(path: str | None) -> dict[int, list[dict]]:
    if path is None:
        return {}
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return {int(tick): list(cmds) for tick, cmds in doc.items()}


def _cmd_run(args) -> int:
    try:
        spec = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario rejected: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    state = sim.run(spec, seed=args.seed, ticks=args.ticks,
                    commands_by_tick=_load_commands(args.commands))
    trajectory = sim.trajectory_of(state)
    sim.write_log(state.log, out / "events.jsonl")
    sim.export_metrics(trajectory, "json", out)
    sim.export_metrics(trajectory, "csv", out)
    final = trajectory.snapshots[-1]
    gate = final["gate"]
    print(f"ticks={args.ticks} events={len(state.log)}")
    print(f"system_trust={final['trust']['system_trust']}")
    print(f"gate={gate['status']} deficiencies={len(gate['deficiencies'])}")
    print(f"artifacts: {out / 'events.jsonl'} {out / 'trajectory.json'} {out / 'metrics.csv'}")
    return 0


def _cmd_replay(args) -> int:
    try:
        spec = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario rejected: {exc}", file=sys.stderr)
        return 2
    log = sim.read_log(args.log)
    want = Path(args.trajectory).read_bytes()
    try:
        got = sim.replay(log, spec, seed=args.seed,
                         control_by_tick=_load_commands(args.commands))
    except sim.ReplayMismatch as exc:
        print(f"replay mismatch: {exc}", file=sys.stderr)
        return 1
    if got.to_json().encode("utf-8") != want:
        print("replay mismatch: reconstructed trajectory differs", file=sys.stderr)
        return 1
    print(f"replay verified: {len(got.snapshots)} snapshots bit-identical")
    return 0


def _cmd_export(args) -> int:
    doc = json.loads(Path(args.trajectory).read_text(encoding="utf-8"))
    trajectory = sim.Trajectory.from_dict(doc)
    written = sim.export_metrics(trajectory, args.format, args.out)
    for path in written:
        print(path)
    return 0


def _cmd_serve(args) -> int:
    try:
        spec = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario rejected: {exc}", file=sys.stderr)
        return 2
    import uvicorn

    from .gateway import MissionRuntime, create_app

    runtime = MissionRuntime(
        spec,
        seed=args.seed,
        ticks=args.ticks,
        out_dir=Path(args.out),
        tick_seconds=args.tick_seconds,
    )
    app = create_app(runtime)
    runtime.start()
    print(f"serving on port {args.port}, out dir {args.out}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trust-ladder",
        description="deterministic trust-gated mission simulator",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_run = sub.add_parser("run", help="run a mission headless and write artifacts")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--ticks", type=int, default=50)
    p_run.add_argument("--out", default=_default_out())
    p_run.add_argument("--commands", default=None,
                       help="JSON file mapping tick -> list of command messages")
    p_run.set_defaults(func=_cmd_run)

    p_replay = sub.add_parser("replay", help="verify a log reproduces a trajectory")
    p_replay.add_argument("--scenario", required=True)
    p_replay.add_argument("--log", required=True)
    p_replay.add_argument("--trajectory", required=True)
    p_replay.add_argument("--seed", type=int, default=None)
    p_replay.add_argument("--commands", default=None,
                          help="control stream (ratings, gate overrides) for the original run")
    p_replay.set_defaults(func=_cmd_replay)

    p_export = sub.add_parser("export", help="convert a trajectory file")
    p_export.add_argument("--trajectory", required=True)
    p_export.add_argument("--format", choices=["csv", "json"], required=True)
    p_export.add_argument("--out", default=_default_out())
    p_export.set_defaults(func=_cmd_export)

    p_serve = sub.add_parser("serve", help="serve the command/telemetry gateway")
    p_serve.add_argument("--scenario", required=True)
    p_serve.add_argument("--seed", type=int, default=None)
    p_serve.add_argument("--ticks", type=int, default=200)
    p_serve.add_argument("--port", type=int, default=8787)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--out", default=_default_out())
    p_serve.add_argument("--tick-seconds", type=float, default=0.5)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
