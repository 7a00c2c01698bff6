#!/usr/bin/env python3
"""Run the bundled search mission headless and print the trust story:
per-edge ladder movement, the satisficing gate timeline, and final metrics.

Usage: python scripts/run_mission.py [--scenario scenarios/basic.json]
       [--seed 7] [--ticks 60] [--out out/]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from trust_ladder import sim
from trust_ladder.scenario import load_scenario

ROOT = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--scenario", default=str(ROOT / "scenarios" / "basic.json"))
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--ticks", type=int, default=60)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    spec = load_scenario(args.scenario)
    state = sim.run(spec, seed=args.seed, ticks=args.ticks)
    snapshots = state.snapshots

    print(f"mission: {args.ticks} ticks, roster {spec.roster()}")
    gate_flips = []
    last = None
    for snap in snapshots:
        status = snap["gate"]["status"]
        if status != last:
            gate_flips.append((snap["tick"], status))
            last = status
    print("gate timeline:", " -> ".join(f"{s}@{t}" for t, s in gate_flips))

    print("\nedge ladders (rung 0-4) at start / quarter / half / end:")
    idx = [0, len(snapshots) // 4, len(snapshots) // 2, len(snapshots) - 1]
    for edge in snapshots[0]["trust"]["edges"]:
        key = (edge["trustor"], edge["trustee"])
        rungs = []
        for i in idx:
            for e in snapshots[i]["trust"]["edges"]:
                if (e["trustor"], e["trustee"]) == key:
                    rungs.append(e["rung"])
        print(f"  {key[0]:>11} -> {key[1]:<11} rungs {rungs}")

    final = snapshots[-1]
    print(f"\nsystem trust: {final['trust']['system_trust']:.3f}")
    print(f"goal progress: {final['goal_progress']}")
    scores = {a['id']: a['score'] for a in final['world']['agents']}
    print(f"agent scores: {scores}")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        sim.write_log(state.log, out / "events.jsonl")
        trajectory = sim.trajectory_of(state)
        sim.export_metrics(trajectory, "json", out)
        sim.export_metrics(trajectory, "csv", out)
        print(f"\nartifacts in {out}/")


if __name__ == "__main__":
    main()
