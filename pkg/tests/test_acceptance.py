"""Acceptance suite: one test per release criterion, each printing a
pass/fail line and enforcing its runtime budget. Runs fully headless."""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from trust_ladder import sim
from trust_ladder.bbn import NodeSpec, WeightedEvent, build_network, protocol_update, query_posterior
from trust_ladder.scenario import load_scenario
from trust_ladder.trust import TrustEdge, TrustNetwork, component_trust, system_trust

from .oracles import oracle_posterior, random_binary_dag

FIXTURE = Path(__file__).resolve().parent.parent / "scenarios" / "basic.json"

_module_t0 = time.monotonic()


class _Criterion:
    def __init__(self, name: str, budget_s: float):
        self.name = name
        self.budget = budget_s

    def __enter__(self):
        self.t0 = time.monotonic()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.monotonic() - self.t0
        verdict = "PASS" if exc_type is None and elapsed < self.budget else "FAIL"
        print(f"[acceptance] {verdict} {self.name} ({elapsed:.2f}s / budget {self.budget:.0f}s)")
        if exc_type is None:
            assert elapsed < self.budget, (
                f"{self.name}: {elapsed:.2f}s exceeded {self.budget:.0f}s budget"
            )
        return False


def basic_spec():
    return load_scenario(json.loads(FIXTURE.read_text()))


def test_goal_update_worked_example_is_exact():
    # Two tasks weighted 9:1; completing the heavy one lifts the goal's
    # achieved state from 0 to exactly 0.9. Tolerance zero.
    with _Criterion("goal-update-worked-example", budget_s=1.0):
        net = build_network(
            [NodeSpec("goal", ["achieved", "not-achieved"], [], [[0.0, 1.0]])]
        )
        protocol_update(net, WeightedEvent("goal", "achieved", 0.9, context_tag="task-a"))
        assert net.beliefs["goal"][0] == 0.9  # exact, no tolerance
        # the 1:9 counterpart contributes exactly 10%
        net2 = build_network(
            [NodeSpec("goal", ["achieved", "not-achieved"], [], [[0.0, 1.0]])]
        )
        protocol_update(net2, WeightedEvent("goal", "achieved", 0.1, context_tag="task-b"))
        assert net2.beliefs["goal"][0] == 0.1


def test_inference_matches_enumeration_on_200_random_dags():
    with _Criterion("exact-inference-oracle-200-dags", budget_s=30.0):
        rng = np.random.default_rng(20250810)
        checked = 0
        while checked < 200:
            n = int(rng.integers(2, 13))  # up to 12 binary nodes
            net = build_network(random_binary_dag(rng, n))
            nodes = net.topological_order()
            k = int(rng.integers(0, min(4, n) + 1))
            picked = list(rng.choice(nodes, size=k, replace=False)) if k else []
            evidence = {str(p): net.nodes[str(p)].states[int(rng.integers(2))] for p in picked}
            query = str(rng.choice(nodes))
            want = oracle_posterior(net, query, evidence)  # CPTs in (0,1): never impossible
            got = query_posterior(net, query, evidence)
            assert max(abs(a - b) for a, b in zip(got, want)) <= 1e-9
            checked += 1


def test_beliefs_stay_normalized_under_10000_updates():
    with _Criterion("normalization-10000-updates", budget_s=10.0):
        rng = np.random.default_rng(99)
        updates_done = 0
        while updates_done < 10_000:
            n = int(rng.integers(2, 9))
            net = build_network(random_binary_dag(rng, n))
            nodes = net.topological_order()
            for _ in range(200):
                node = str(rng.choice(nodes))
                state = net.nodes[node].states[int(rng.integers(2))]
                protocol_update(
                    net, WeightedEvent(node, state, float(rng.uniform(0, 1)))
                )
                updates_done += 1
            for node in nodes:
                belief = net.beliefs[node]
                assert abs(sum(belief) - 1.0) <= 1e-9
                assert all(0.0 <= p <= 1.0 for p in belief)


def test_weakest_component_rules_1000_networks():
    with _Criterion("weakest-component-1000-networks", budget_s=5.0):
        rng = np.random.default_rng(4242)
        for _ in range(1000):
            roster = [f"agent-{i}" for i in range(int(rng.integers(2, 6)))]
            network = TrustNetwork.complete(roster)
            for edge in network.edges.values():
                edge.capability = float(rng.uniform(0, 1))
                edge.predictability = float(rng.uniform(0, 1))
                edge.integrity = float(rng.uniform(0, 1))
            got = system_trust(network, roster)
            want = min(component_trust(e) for e in network.edges.values())
            assert got == want
            # raising any single element never decreases system trust
            key = list(network.edges)[int(rng.integers(len(network.edges)))]
            element = ["capability", "predictability", "integrity"][int(rng.integers(3))]
            edge = network.edges[key]
            setattr(edge, element, min(1.0, getattr(edge, element) + float(rng.uniform(0, 1))))
            assert system_trust(network, roster) >= got


def test_satisficing_gate_flips_at_first_satisfying_tick(tmp_path):
    with _Criterion("satisficing-gate-fixture", budget_s=5.0):
        spec = basic_spec()
        state = sim.run(spec, ticks=40)
        (exported,) = sim.export_metrics(sim.trajectory_of(state), "json", tmp_path)
        snapshots = json.loads(exported.read_text())["snapshots"]

        def satisfied(snap):
            edges = {(e["trustor"], e["trustee"]): e for e in snap["trust"]["edges"]}
            return all(
                edges[key][element] >= minimum
                for key in spec.required_edges
                for element, minimum in spec.thresholds.items()
            )

        # blocked at tick 0, with the complete deficiency enumeration
        first = snapshots[0]
        assert first["gate"]["status"] == "blocked"
        expected_deficiencies = {
            (tuple(key), element)
            for key in spec.required_edges
            for element, minimum in spec.thresholds.items()
            if 0.5 < minimum
        }
        got_deficiencies = [
            (tuple(d["edge"]), d["element"]) for d in first["gate"]["deficiencies"]
        ]
        assert set(got_deficiencies) == expected_deficiencies
        assert len(got_deficiencies) == len(set(got_deficiencies))

        first_ok = next(s["tick"] for s in snapshots if satisfied(s))
        for snap in snapshots:
            want = "proceed" if satisfied(snap) else "blocked"
            assert snap["gate"]["status"] == want, f"tick {snap['tick']}"
        assert snapshots[first_ok]["gate"]["status"] == "proceed"
        assert all(s["gate"]["status"] == "blocked" for s in snapshots[:first_ok])


def test_behavioral_separation_between_team_and_selfish_robot():
    # Expected gap recomputed by scripts/behavioral_separation.py: the selfish
    # robot idles against a standing fresh-scan alternative (-0.5 per tick,
    # integrity floors at 0 within ~10 events) while its team twin accumulates
    # +0.5 judgments (integrity rises to ~0.8); 0.1 is a conservative floor.
    with _Criterion("behavioral-separation", budget_s=30.0):
        doc = json.loads(FIXTURE.read_text())
        team_state = sim.run(load_scenario(doc), ticks=200)
        for v in doc["values"]:
            if v["agent"] == "robot-2":
                v["lambda_selfish"] = 1.0
        selfish_state = sim.run(load_scenario(doc), ticks=200)

        def mean_integrity(state):
            values = []
            for snap in state.snapshots[151:201]:
                for edge in snap["trust"]["edges"]:
                    if edge["trustee"] == "robot-2":
                        values.append(edge["integrity"])
            return sum(values) / len(values)

        team_i, selfish_i = mean_integrity(team_state), mean_integrity(selfish_state)
        assert selfish_i < team_i
        assert team_i - selfish_i >= 0.1

        team_rungs = {
            e["trustor"]: e["rung"]
            for e in team_state.snapshots[200]["trust"]["edges"]
            if e["trustee"] == "robot-2"
        }
        selfish_rungs = {
            e["trustor"]: e["rung"]
            for e in selfish_state.snapshots[200]["trust"]["edges"]
            if e["trustee"] == "robot-2"
        }
        for trustor, rung in selfish_rungs.items():
            assert rung <= team_rungs[trustor]


def test_determinism_and_replay_bit_exact():
    with _Criterion("determinism-and-replay", budget_s=10.0):
        spec = basic_spec()
        a = sim.run(spec, ticks=60)
        b = sim.run(spec, ticks=60)
        log_bytes_a = "".join(sim.canonical_json(r.to_dict()) + "\n" for r in a.log)
        log_bytes_b = "".join(sim.canonical_json(r.to_dict()) + "\n" for r in b.log)
        assert log_bytes_a == log_bytes_b
        assert sim.trajectory_of(a).to_json() == sim.trajectory_of(b).to_json()
        assert sim.replay(a.log, spec).to_json() == sim.trajectory_of(a).to_json()

        commands = {
            1: [{"kind": "move", "issuer": "coordinator", "target_agent": "robot-1",
                 "params": {"to": [1, 2]}}],
            4: [{"kind": "scan", "issuer": "coordinator", "target_agent": "robot-2",
                 "params": {"tag": "t-h01"}}],  # stale: rejected, logged as such
            9: [{"kind": "override-gate", "issuer": "coordinator",
                 "target_agent": "coordinator", "params": {}}],
        }
        with_cmds = sim.run(spec, ticks=30, commands_by_tick=commands)
        again = sim.run(spec, ticks=30, commands_by_tick=commands)
        assert sim.trajectory_of(with_cmds).to_json() == sim.trajectory_of(again).to_json()
        control = {9: commands[9]}
        replayed = sim.replay(with_cmds.log, spec, control_by_tick=control)
        assert replayed.to_json() == sim.trajectory_of(with_cmds).to_json()


def test_zz_total_acceptance_runtime_under_two_minutes():
    elapsed = time.monotonic() - _module_t0
    print(f"[acceptance] total module wall time {elapsed:.2f}s (budget 120s)")
    assert elapsed < 120.0
