#!/usr/bin/env python3
"""Oracle for the team-vs-selfish separation threshold.

Runs the fixture mission twice with the same seed, differing only in one
robot's selfishness (lambda 0 vs 1), and reports the integrity estimates
teammates hold of that robot. Also derives the rule-table bound the
acceptance threshold rests on:

  selfish twin: idling while a fresh scan is available draws -0.5 per event,
  so integrity falls from the 0.5 prior by beta*0.5 = 0.05 per tick and
  floors at 0 within ~10 ticks;
  team twin: each fresh scan draws +0.5 (and +1.0 for assists above the
  exertion cost), so integrity climbs by at least 0.05 per working tick.

  With 200 ticks and ~5 scans per robot the final-quartile gap is bounded
  below by roughly 0.25 + 0.5 = 0.75; the frozen acceptance threshold of
  0.1 leaves an order-of-magnitude margin.

Usage: python scripts/behavioral_separation.py [--ticks 200] [--robot robot-2]
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from trust_ladder import sim
from trust_ladder.scenario import load_scenario

ROOT = Path(__file__).resolve().parent.parent


def mean_integrity_toward(state, ratee, first, last):
    values = []
    for snap in state.snapshots[first:last + 1]:
        for edge in snap["trust"]["edges"]:
            if edge["trustee"] == ratee:
                values.append(edge["integrity"])
    return sum(values) / len(values)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--scenario", default=str(ROOT / "scenarios" / "basic.json"))
    parser.add_argument("--ticks", type=int, default=200)
    parser.add_argument("--robot", default="robot-2")
    args = parser.parse_args()

    doc = json.loads(Path(args.scenario).read_text())
    team_state = sim.run(load_scenario(doc), ticks=args.ticks)
    for entry in doc["values"]:
        if entry["agent"] == args.robot:
            entry["lambda_selfish"] = 1.0
    selfish_state = sim.run(load_scenario(doc), ticks=args.ticks)

    q0 = args.ticks - args.ticks // 4 + 1
    team_i = mean_integrity_toward(team_state, args.robot, q0, args.ticks)
    selfish_i = mean_integrity_toward(selfish_state, args.robot, q0, args.ticks)

    print(f"runs: {args.ticks} ticks, lambda({args.robot}) = 0 vs 1, same seed")
    print(f"final-quartile mean integrity toward {args.robot}:")
    print(f"  team twin    {team_i:.4f}")
    print(f"  selfish twin {selfish_i:.4f}")
    print(f"  gap          {team_i - selfish_i:.4f}  (acceptance floor: 0.1)")

    for label, state in (("team", team_state), ("selfish", selfish_state)):
        rungs = {
            e["trustor"]: e["rung"]
            for e in state.snapshots[args.ticks]["trust"]["edges"]
            if e["trustee"] == args.robot
        }
        print(f"  final rungs toward {args.robot} ({label} twin): {rungs}")

    from collections import Counter
    actions = Counter(r.action for r in selfish_state.log if r.agent_id == args.robot)
    print(f"  selfish twin action mix: {dict(actions)}")


if __name__ == "__main__":
    main()
