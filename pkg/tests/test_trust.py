import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trust_ladder.bbn import NodeSpec, build_network
from trust_ladder.trust import (
    Deficiency,
    IntegrityJudgment,
    LadderPosition,
    ObservationMismatch,
    Reputation,
    TrustEdge,
    TrustError,
    TrustNetwork,
    ValueProfile,
    component_trust,
    infer_goal,
    judge_integrity,
    ladder_position,
    raw_rung,
    satisfice,
    system_trust,
    update_capability,
    update_integrity,
    update_predictability,
)
from trust_ladder.world import (
    AgentState,
    ARTag,
    EventRecord,
    Grid,
    MissionConstants,
    Task,
    TaskCatalog,
    WorldState,
    available_actions,
    make_context,
    principle_by_id,
)

from .oracles import iterated_ema, oracle_posterior

TOL = 1e-9


def default_catalog():
    return TaskCatalog(
        [
            Task("scan-area-tag", "scan", "area", cost=2.0, teammate_impact="helps"),
            Task("scan-object-tag", "scan", "object", cost=2.0, teammate_impact="helps"),
            Task("assist-teammate", "assist", cost=5.0, teammate_impact="helps"),
            Task("recharge", "recharge"),
            Task("idle", "idle"),
            Task("move", "move"),
        ]
    )


def small_world(robot_energy=10.0, human_pos=(4, 4), robot_pos=(1, 1)):
    grid = Grid(width=5, height=5, hazards=frozenset({(2, 2)}), recharge_exits=((0, 0),))
    tags = [
        ARTag("tag-r1", (1, 1), "robot-level", "hazard-area"),
        ARTag("tag-h1", (4, 4), "human-level", "object-operational"),
    ]
    agents = [
        AgentState("robot-1", "robot-field", position=robot_pos, energy=robot_energy),
        AgentState("human-1", "human-field", position=human_pos),
    ]
    return WorldState(grid=grid, tags=tags, agents=agents, tick=3)


def judged(world, agent_id, action, alternatives, principles=()):
    record = EventRecord(
        seq=1,
        agent_id=agent_id,
        time=world.tick,
        location=world.agent(agent_id).position,
        object=action.target if isinstance(action.target, str) else None,
        action=action.kind,
        outcome="success",
        action_ident=action.ident,
    )
    context = make_context(world, agent_id, alternatives)
    return judge_integrity(
        record,
        context,
        ValueProfile(agent_id, 0.5),
        list(principles),
        alternatives,
        world=world,
        constants=MissionConstants(),
    )


class TestJudgeIntegrity:
    def test_scan_to_warn_team_is_team_benefit(self):
        world = small_world()
        acts = available_actions(world, "robot-1", default_catalog(), MissionConstants())
        scan = next(a for a in acts if a.kind == "scan")
        j = judged(world, "robot-1", scan, acts)
        assert (j.score, j.basis) == (0.5, "team-benefit")

    def test_idle_while_assist_available_is_selfish(self):
        world = small_world(human_pos=(2, 2), robot_pos=(2, 1))
        acts = available_actions(world, "robot-1", default_catalog(), MissionConstants())
        assert any(a.kind == "assist" for a in acts)
        idle = next(a for a in acts if a.kind == "idle")
        j = judged(world, "robot-1", idle, acts)
        assert (j.score, j.basis) == (-0.5, "selfish-with-team-alternative")

    def test_recharge_with_no_team_option_is_neutral(self):
        world = small_world(robot_energy=3.0, robot_pos=(3, 0))
        acts = available_actions(world, "robot-1", default_catalog(), MissionConstants())
        assert not any(a.teammate_impact == "helps" for a in acts)
        recharge = next(a for a in acts if a.kind == "recharge")
        j = judged(world, "robot-1", recharge, acts)
        assert (j.score, j.basis) == (0.0, "selfish-no-impact")

    def test_high_cost_assist_is_exertion(self):
        world = small_world(human_pos=(2, 2), robot_pos=(2, 1))
        acts = available_actions(world, "robot-1", default_catalog(), MissionConstants())
        assist = next(a for a in acts if a.kind == "assist")
        j = judged(world, "robot-1", assist, acts)
        assert (j.score, j.basis) == (1.0, "exertion-for-team")

    def test_principle_violation_dominates(self):
        world = small_world(human_pos=(2, 1))
        acts = available_actions(world, "human-1", default_catalog(), MissionConstants())
        into_hazard = next(
            a for a in acts if a.kind == "move" and a.target == (2, 2)
        )
        j = judged(
            world,
            "human-1",
            into_hazard,
            acts,
            principles=[principle_by_id("no-human-into-hazard")],
        )
        assert (j.score, j.basis) == (-1.0, "principle-violation")

    def test_unavailable_action_raises(self):
        world = small_world()
        acts = available_actions(world, "robot-1", default_catalog(), MissionConstants())
        ghost = EventRecord(1, "robot-1", 3, (1, 1), "tag-h1", "scan", "success", "scan:tag-h1")
        with pytest.raises(ObservationMismatch):
            judge_integrity(
                ghost,
                make_context(world, "robot-1", acts),
                ValueProfile("robot-1"),
                [],
                acts,
                world=world,
                constants=MissionConstants(),
            )

    def test_deterministic(self):
        world = small_world()
        acts = available_actions(world, "robot-1", default_catalog(), MissionConstants())
        scan = next(a for a in acts if a.kind == "scan")
        first = judged(world, "robot-1", scan, acts)
        second = judged(world, "robot-1", scan, acts)
        assert first == second


class TestElementUpdates:
    def test_capability_success_from_half(self):
        edge = TrustEdge("a", "b", capability=0.5)
        assert update_capability(edge, True).capability == pytest.approx(0.6)

    def test_capability_fixed_point_at_one(self):
        edge = TrustEdge("a", "b", capability=1.0)
        assert update_capability(edge, True).capability == pytest.approx(1.0)

    def test_capability_ten_successes_matches_closed_form(self):
        edge = TrustEdge("a", "b", capability=0.5)
        for _ in range(10):
            update_capability(edge, True)
        closed_form = 0.5 * 0.8**10 + (1 - 0.8**10)
        assert edge.capability == pytest.approx(closed_form, abs=1e-12)
        assert edge.capability == pytest.approx(0.9463129088, abs=1e-10)
        assert edge.capability == pytest.approx(
            iterated_ema(0.5, 0.2, [1.0] * 10), abs=1e-12
        )

    def test_success_never_decreases_capability(self):
        for start in (0.0, 0.3, 0.99, 1.0):
            edge = TrustEdge("a", "b", capability=start)
            assert update_capability(edge, True).capability >= start

    def test_predictability_match_and_mismatch(self):
        edge = TrustEdge("a", "b", predictability=0.5)
        assert update_predictability(edge, "scan:t", "scan:t").predictability == pytest.approx(0.6)
        edge = TrustEdge("a", "b", predictability=0.5)
        assert update_predictability(edge, "scan:t", "idle").predictability == pytest.approx(0.4)

    def test_predictability_alternation_stays_in_band(self):
        edge = TrustEdge("a", "b", predictability=0.5)
        observations = []
        for i in range(200):
            match = i % 2 == 0
            update_predictability(edge, "x", "x" if match else "y")
            observations.append(1.0 if match else 0.0)
            assert edge.predictability == pytest.approx(
                iterated_ema(0.5, 0.2, observations), abs=1e-12
            )
            if i > 10:
                assert 0.39 <= edge.predictability <= 0.61

    def test_integrity_step_and_clamp(self):
        edge = TrustEdge("a", "b", integrity=0.5)
        rep = Reputation("a", "b")
        update_integrity(edge, IntegrityJudgment("b", 1, 1.0, "exertion-for-team"), rep)
        assert edge.integrity == pytest.approx(0.6)

        edge = TrustEdge("a", "b", integrity=0.05)
        update_integrity(edge, IntegrityJudgment("b", 2, -1.0, "principle-violation"), rep)
        assert edge.integrity == 0.0

    def test_integrity_rejects_actor_mismatch(self):
        edge = TrustEdge("a", "b")
        with pytest.raises(TrustError):
            update_integrity(edge, IntegrityJudgment("c", 1, 0.5, "team-benefit"), Reputation("a", "c"))

    def test_reputation_summary_zero_mean(self):
        rep = Reputation("a", "b")
        edge = TrustEdge("a", "b")
        for score, basis in [
            (0.5, "team-benefit"),
            (-0.5, "selfish-with-team-alternative"),
            (0.0, "selfish-no-impact"),
        ]:
            update_integrity(edge, IntegrityJudgment("b", 1, score, basis), rep)
        assert rep.summary == pytest.approx(0.5)

    def test_reputation_summary_is_pure_function_of_history(self):
        rep = Reputation("a", "b")
        edge = TrustEdge("a", "b")
        for i in range(7):
            update_integrity(
                edge, IntegrityJudgment("b", i, (-1) ** i * 0.5, "team-benefit"), rep
            )
        assert rep.summary == pytest.approx(Reputation.summarize(rep.history), abs=TOL)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**31 - 1))
    def test_elements_stay_bounded_under_random_streams(self, seed):
        rng = np.random.default_rng(seed)
        edge = TrustEdge("a", "b",
                         capability=float(rng.uniform(0, 1)),
                         predictability=float(rng.uniform(0, 1)),
                         integrity=float(rng.uniform(0, 1)))
        rep = Reputation("a", "b")
        for _ in range(60):
            kind = rng.integers(3)
            if kind == 0:
                update_capability(edge, bool(rng.integers(2)))
            elif kind == 1:
                update_predictability(edge, "p", "p" if rng.integers(2) else "q")
            else:
                score = float(rng.choice([-1.0, -0.5, 0.0, 0.5, 1.0]))
                update_integrity(edge, IntegrityJudgment("b", 0, score, "team-benefit"), rep)
            for value in (edge.capability, edge.predictability, edge.integrity):
                assert 0.0 <= value <= 1.0


class TestAggregation:
    def test_component_trust_examples(self):
        assert component_trust(TrustEdge("a", "b", 1, 1, 1)) == 1
        assert component_trust(TrustEdge("a", "b", 0.9, 0.4, 0.7)) == pytest.approx(0.4)

    def test_component_trust_monotone(self):
        base = TrustEdge("a", "b", 0.5, 0.4, 0.6)
        raised = TrustEdge("a", "b", 0.9, 0.4, 0.6)
        assert component_trust(raised) >= component_trust(base)

    def test_system_trust_weakest_edge(self):
        net = TrustNetwork.complete(["a", "b", "c"], default=(1.0, 1.0, 1.0))
        assert system_trust(net, ["a", "b", "c"]) == 1.0
        net.edge("b", "c").integrity = 0.2
        assert system_trust(net, ["a", "b", "c"]) == pytest.approx(0.2)

    def test_system_trust_subset_excludes_weak_edge(self):
        net = TrustNetwork.complete(["a", "b", "c"], default=(1.0, 1.0, 1.0))
        net.edge("b", "c").integrity = 0.2
        assert system_trust(net, ["a", "b"]) == 1.0

    def test_system_trust_needs_two_members(self):
        net = TrustNetwork.complete(["a", "b"])
        with pytest.raises(TrustError):
            system_trust(net, ["a"])


class TestSatisfice:
    def test_zero_thresholds_always_proceed(self):
        net = TrustNetwork.complete(["a", "b"], default=(0.0, 0.0, 0.0))
        decision = satisfice(net, list(net.edges), {})
        assert decision.proceed and decision.deficiencies == []

    def test_single_deficiency_blocks(self):
        net = TrustNetwork.complete(["a", "b"], default=(0.5, 0.5, 0.5))
        net.edge("a", "b").integrity = 0.49
        decision = satisfice(
            net,
            list(sorted(net.edges)),
            {"capability": 0.5, "predictability": 0.5, "integrity": 0.5},
        )
        assert not decision.proceed
        assert decision.deficiencies == [
            Deficiency(("a", "b"), "integrity", 0.49, 0.5)
        ]

    def test_deficiency_list_is_complete(self):
        net = TrustNetwork.complete(["a", "b"], default=(0.2, 0.2, 0.2))
        decision = satisfice(
            net, list(sorted(net.edges)), {"capability": 0.5, "integrity": 0.5}
        )
        assert len(decision.deficiencies) == 4  # 2 edges x 2 thresholded elements
        keys = {(d.edge, d.element) for d in decision.deficiencies}
        assert len(keys) == 4

    def test_proceed_iff_no_deficiencies(self):
        net = TrustNetwork.complete(["a", "b"], default=(0.6, 0.6, 0.6))
        decision = satisfice(net, list(net.edges), {"capability": 0.5})
        assert decision.proceed == (not decision.deficiencies)

    def test_unknown_edge_raises(self):
        net = TrustNetwork.complete(["a", "b"])
        with pytest.raises(TrustError):
            satisfice(net, [("a", "z")], {})


class TestLadder:
    def test_zero_trust_drops_to_floor(self):
        for prev_rung in range(5):
            prev = LadderPosition(("a", "b"), prev_rung)
            assert ladder_position(0.0, prev).rung == 0

    def test_hysteresis_holds_rung(self):
        prev = LadderPosition(("a", "b"), 2)
        assert ladder_position(0.61, prev).rung == 2

    def test_crossing_band_moves_rung(self):
        prev = LadderPosition(("a", "b"), 2)
        assert ladder_position(0.66, prev).rung == 3

    def test_initial_rung_is_raw_quantization(self):
        assert ladder_position(0.5, None, edge=("a", "b")).rung == 2
        assert raw_rung(0.5) == 2

    @given(
        trust=st.floats(min_value=0.0, max_value=1.0),
        prev_rung=st.integers(min_value=0, max_value=4),
    )
    def test_idempotent(self, trust, prev_rung):
        prev = LadderPosition(("a", "b"), prev_rung)
        once = ladder_position(trust, prev)
        twice = ladder_position(trust, once)
        assert once.rung == twice.rung


class TestInferGoal:
    def test_single_goal_task_gives_point_mass(self):
        specs = [
            NodeSpec("task_a", ["performed", "not"], [], [[0.3, 0.7]], role="task"),
            NodeSpec("task_b", ["performed", "not"], [], [[0.0, 1.0]], role="task"),
            NodeSpec("goal_a", ["pursued", "not"], ["task_a"],
                     [[1.0, 0.0], [0.0, 1.0]], role="goal"),
            NodeSpec("goal_b", ["pursued", "not"], ["task_b"],
                     [[1.0, 0.0], [0.0, 1.0]], role="goal"),
        ]
        net = build_network(specs)
        dist = infer_goal(net, "task_a")
        assert dist["goal_a"] == pytest.approx(1.0, abs=TOL)
        assert dist["goal_b"] == pytest.approx(0.0, abs=TOL)

    def test_shared_task_symmetric_goals_uniform(self):
        specs = [
            NodeSpec("task_s", ["performed", "not"], [], [[0.5, 0.5]], role="task"),
            NodeSpec("goal_1", ["pursued", "not"], ["task_s"],
                     [[0.8, 0.2], [0.1, 0.9]], role="goal"),
            NodeSpec("goal_2", ["pursued", "not"], ["task_s"],
                     [[0.8, 0.2], [0.1, 0.9]], role="goal"),
        ]
        net = build_network(specs)
        dist = infer_goal(net, "task_s")
        assert dist["goal_1"] == pytest.approx(0.5, abs=TOL)
        assert dist["goal_2"] == pytest.approx(0.5, abs=TOL)

    def test_context_wired_fixture_matches_enumeration(self):
        specs = [
            NodeSpec("context", ["routine", "busy"], [], [[0.65, 0.35]], role="context"),
            NodeSpec("task_a", ["performed", "not"], ["context"],
                     [[0.5, 0.5], [0.2, 0.8]], role="task"),
            NodeSpec("task_b", ["performed", "not"], ["context"],
                     [[0.15, 0.85], [0.6, 0.4]], role="task"),
            NodeSpec("goal_a", ["pursued", "not"], ["task_a", "task_b"],
                     [[0.95, 0.05], [0.85, 0.15], [0.25, 0.75], [0.05, 0.95]],
                     role="goal"),
            NodeSpec("goal_b", ["pursued", "not"], ["task_b"],
                     [[0.9, 0.1], [0.2, 0.8]], role="goal"),
        ]
        net = build_network(specs)
        dist = infer_goal(net, "task_a", {"context": "busy"})
        evidence = {"task_a": "performed", "context": "busy"}
        want_a = oracle_posterior(net, "goal_a", evidence)[0]
        want_b = oracle_posterior(net, "goal_b", evidence)[0]
        total = want_a + want_b
        assert dist["goal_a"] == pytest.approx(want_a / total, abs=TOL)
        assert dist["goal_b"] == pytest.approx(want_b / total, abs=TOL)
        assert sum(dist.values()) == pytest.approx(1.0, abs=TOL)

    def test_unknown_task_raises(self):
        specs = [
            NodeSpec("task_a", ["performed", "not"], [], [[0.5, 0.5]], role="task"),
            NodeSpec("goal_a", ["pursued", "not"], ["task_a"],
                     [[1.0, 0.0], [0.0, 1.0]], role="goal"),
        ]
        net = build_network(specs)
        with pytest.raises(Exception, match="unknown"):
            infer_goal(net, "task_zz")
