"""Deterministic tick-synchronous mission loop.

One tick: drain queued external inputs, register everyone's action
predictions, let each agent act in roster order, fold every observed event
through belief/trust updates, emit interval ratings, evaluate the satisficing
gate, and append a snapshot. Identical (scenario, seed, command stream) yields
byte-identical logs and trajectories; replay rebuilds the trajectory from the
event log and verifies it as it goes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .bbn import BeliefNetwork, WeightedEvent, protocol_update
from .policies import Policy, RatingRecord, choose_action, predict_teammate_action, rate_teammates
from .rng import SplitRng
from .scenario import ScenarioSpec, build_observer_network, context_label
from .trust import (
    EdgeKey,
    GateDecision,
    LadderPosition,
    Reputation,
    TrustNetwork,
    component_trust,
    judge_integrity,
    ladder_position,
    satisfice,
    trust_snapshot,
    update_capability,
    update_integrity,
    update_predictability,
)
from .world import (
    Action,
    ActionNotAvailable,
    EventRecord,
    MissionError,
    OFFSITE,
    Task,
    WorldState,
    action_stub,
    advance_tick,
    apply_action,
    available_actions,
    goal_progress,
    make_context,
    parse_ident,
)

WORLD_COMMAND_KINDS = ("move", "scan", "assist", "recharge", "idle")
CONTROL_COMMAND_KINDS = ("override-gate", "rating")


class SimError(Exception):
    pass


class ReplayMismatch(SimError):
    """The log disagrees with what the scenario and seed reproduce."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class Trajectory:
    scenario_digest: str
    seed: int
    snapshots: list[dict]

    def to_dict(self) -> dict:
        return {
            "v": 1,
            "scenario_digest": self.scenario_digest,
            "seed": self.seed,
            "ticks": len(self.snapshots) - 1,
            "snapshots": self.snapshots,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict()) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "Trajectory":
        return cls(
            scenario_digest=doc["scenario_digest"],
            seed=doc["seed"],
            snapshots=list(doc["snapshots"]),
        )


@dataclass
class SimState:
    spec: ScenarioSpec
    seed: int
    world: WorldState
    trust: TrustNetwork
    beliefs: dict[str, BeliefNetwork]
    reputations: dict[tuple[str, str], Reputation]
    ladders: dict[EdgeKey, LadderPosition]
    policies: dict[str, Policy]
    log: list[EventRecord] = field(default_factory=list)
    snapshots: list[dict] = field(default_factory=list)
    completed_tasks: set[str] = field(default_factory=set)
    last_tasks: dict[str, dict[str, str | None]] = field(default_factory=dict)
    gate: GateDecision = field(default_factory=lambda: GateDecision(True))
    gate_overridden: bool = False
    open_prompts: dict[tuple[str, int], int] = field(default_factory=dict)
    next_seq: int = 1
    outcome_rng: SplitRng = field(default_factory=lambda: SplitRng(0, "outcome"))
    policy_rng: SplitRng = field(default_factory=lambda: SplitRng(0, "policy"))


def init(spec: ScenarioSpec, seed: int | None = None) -> SimState:
    """Fresh mission state at tick 0, snapshot included."""
    seed = spec.seed if seed is None else seed
    roster = spec.roster()
    world = spec.initial_world()
    trust = TrustNetwork.complete(roster, priors=spec.trust_priors)
    state = SimState(
        spec=spec,
        seed=seed,
        world=world,
        trust=trust,
        beliefs={a: build_observer_network(spec) for a in roster},
        reputations={
            (o, a): Reputation(o, a) for o in roster for a in roster if o != a
        },
        ladders={
            key: ladder_position(component_trust(edge), None, edge=key)
            for key, edge in trust.edges.items()
        },
        policies={
            a: Policy(a, spec.value_profile(a).lambda_selfish) for a in roster
        },
        last_tasks={o: {a: None for a in roster if a != o} for o in roster},
        outcome_rng=SplitRng(seed, "outcome"),
        policy_rng=SplitRng(seed, "policy"),
    )
    state.gate = _evaluate_gate(state)
    state.snapshots.append(_snapshot(state, ratings=[]))
    return state


def _evaluate_gate(state: SimState) -> GateDecision:
    if state.gate_overridden:
        return GateDecision(proceed=True, deficiencies=[], overridden=True)
    return satisfice(state.trust, state.spec.required_edges, state.spec.thresholds)


def _snapshot(state: SimState, ratings: Sequence[RatingRecord]) -> dict:
    spec = state.spec
    progress = {}
    for goal in spec.goals:
        done = state.completed_tasks & set(goal.task_ids())
        progress[goal.id] = goal_progress(goal, done)
    prompts = [
        {
            "rater": rater,
            "window_start": start,
            "expires_at": start + spec.rating_interval,
        }
        for (rater, start) in sorted(state.open_prompts)
    ]
    available = {
        agent: [
            a.ident
            for a in available_actions(state.world, agent, spec.catalog, spec.constants)
        ]
        for agent in spec.roster()
    }
    return {
        "tick": state.world.tick,
        "world": state.world.to_dict(),
        "trust": trust_snapshot(state.trust, state.ladders, spec.roster()),
        "gate": state.gate.to_dict(),
        "goal_progress": progress,
        "ratings": [r.to_dict() for r in ratings],
        "prompts": prompts,
        "available": available,
    }


def _task_for_event(spec: ScenarioSpec, world_before: WorldState, record: EventRecord) -> Task:
    kind, target = parse_ident(record.action_ident)
    if kind == "scan" and isinstance(target, str):
        return spec.catalog.resolve("scan", world_before.tag(target).info)
    return spec.catalog.resolve(kind)


def _observes(spec: ScenarioSpec, world_before: WorldState, observer: str, record: EventRecord) -> bool:
    radius = spec.observability_radius
    if radius is None:
        return True
    pos = world_before.agent(observer).position
    if pos is None or record.location == OFFSITE:
        return True  # the coordinator link carries everything
    where = record.location
    return abs(pos[0] - where[0]) + abs(pos[1] - where[1]) <= radius


def _handle_rating_command(state: SimState, cmd: Mapping, tick: int) -> RatingRecord | None:
    spec = state.spec
    params = cmd.get("params", {})
    rater = params.get("rater")
    ratee = params.get("ratee")
    expectation = params.get("expectation")
    open_window = None
    for (owner, start) in state.open_prompts:
        if owner == rater and start <= tick < start + spec.rating_interval:
            open_window = start
            break
    if open_window is None:
        return None  # expired in flight; the command log still records the attempt
    del state.open_prompts[(rater, open_window)]
    return RatingRecord(
        rater=rater,
        ratee=ratee,
        tick=tick,
        expectation=expectation,
        source="human",
        window_start=open_window,
    )


def _execute_tick(
    state: SimState,
    commands: Sequence[Mapping],
    expected: Sequence[EventRecord] | None = None,
) -> list[EventRecord]:
    spec = state.spec
    roster = spec.roster()
    state.world = advance_tick(state.world, spec.constants)
    tick = state.world.tick
    ratings: list[RatingRecord] = []

    # 1. queued external inputs
    overrides: dict[str, Action] = {}
    for cmd in commands:
        kind = cmd["kind"]
        if kind == "override-gate":
            state.gate_overridden = True
        elif kind == "rating":
            record = _handle_rating_command(state, cmd, tick)
            if record is not None:
                ratings.append(record)
        elif kind in WORLD_COMMAND_KINDS:
            target_agent = cmd["target_agent"]
            if target_agent not in roster:
                raise SimError(f"command for unknown agent {target_agent!r}")
            if target_agent in overrides:
                raise SimError(f"multiple commands for {target_agent!r} in one tick")
            params = cmd.get("params", {})
            if kind == "move":
                to = params.get("to", [])
                action = Action("move", (int(to[0]), int(to[1])))
            elif kind == "scan":
                action = Action("scan", str(params.get("tag", "")))
            elif kind == "assist":
                action = Action("assist", str(params.get("agent", "")))
            else:
                action = Action(kind)
            overrides[target_agent] = action
        else:
            raise SimError(f"unknown command kind {kind!r}")

    # 2. predictions, then everyone's choice, all against the tick-start world
    predictions: dict[tuple[str, str], str] = {}
    for observer in roster:
        if state.world.agent(observer).controlled_by != "policy":
            continue
        net = state.beliefs[observer]
        for teammate in roster:
            if teammate == observer:
                continue
            predicted = predict_teammate_action(
                net, state.world, teammate, state.last_tasks[observer][teammate], spec=spec
            )
            predictions[(observer, teammate)] = predicted.ident

    planned: list[tuple[str, Action]] = []
    if expected is None:
        for agent_id in roster:
            if agent_id in overrides:
                planned.append((agent_id, overrides[agent_id]))
            elif state.world.agent(agent_id).controlled_by == "policy":
                planned.append(
                    (agent_id, choose_action(state.policies[agent_id], state.world,
                                             agent_id, state.policy_rng, spec=spec))
                )
            else:
                planned.append((agent_id, Action("idle")))
    else:
        logged_agents = [r.agent_id for r in expected]
        if logged_agents != roster:
            raise ReplayMismatch(
                f"tick {tick}: log order {logged_agents} does not match roster {roster}"
            )
        planned = [(r.agent_id, action_stub(r.action_ident)) for r in expected]

    # 3. apply in roster order; capture each actor's true alternative set
    events: list[EventRecord] = []
    observed_inputs: list[tuple[EventRecord, WorldState, list[Action]]] = []
    for idx, (agent_id, action) in enumerate(planned):
        world_before = state.world
        offered = available_actions(world_before, agent_id, spec.catalog, spec.constants)
        try:
            new_world, record, _ = apply_action(
                world_before, agent_id, action, spec.constants, spec.catalog,
                state.outcome_rng, state.next_seq,
            )
            state.world = new_world
        except (ActionNotAvailable, MissionError):
            record = EventRecord(
                seq=state.next_seq,
                agent_id=agent_id,
                time=tick,
                location=world_before.agent(agent_id).position or OFFSITE,
                object=action.target if isinstance(action.target, str) else None,
                action=action.kind,
                outcome="rejected",
                action_ident=action.ident,
            )
        if expected is not None:
            want = expected[idx]
            if record != want:
                raise ReplayMismatch(
                    f"tick {tick}: replayed {record.to_dict()} != logged {want.to_dict()}"
                )
        state.next_seq += 1
        state.log.append(record)
        events.append(record)
        observed_inputs.append((record, world_before, offered))

    # 4. fold observations through beliefs and trust edges
    for record, world_before, offered in observed_inputs:
        actor = record.agent_id
        if record.outcome == "rejected":
            continue
        task = _task_for_event(spec, world_before, record)
        success = record.outcome == "success"
        if success:
            state.completed_tasks.add(task.id)
        context = make_context(world_before, actor, offered)
        judgment = judge_integrity(
            record, context, spec.value_profile(actor), spec.principles, offered,
            world=world_before, constants=spec.constants,
        )
        label = context_label(spec, world_before)
        for observer in roster:
            if observer == actor:
                continue
            observed = _observes(spec, world_before, observer, record)
            if not observed and not spec.share_judgments:
                continue
            edge = state.trust.edge(observer, actor)
            update_integrity(edge, judgment, state.reputations[(observer, actor)], beta=spec.beta)
            if not observed:
                continue
            if task.id in state.beliefs[observer].nodes and success:
                protocol_update(
                    state.beliefs[observer],
                    WeightedEvent(task.id, "performed", task.event_weight, context_tag=label),
                )
            state.last_tasks[observer][actor] = task.id
            if task.kind in spec.capability_task_kinds and record.outcome in ("success", "failure"):
                update_capability(edge, success, alpha=spec.alpha)
            key = (observer, actor)
            if key in predictions:
                update_predictability(edge, predictions[key], record.action_ident, alpha=spec.alpha)

    # 5. interval ratings: policy raters emit now, external raters get prompts;
    #    prompts from the previous window expire into default ratings
    for (rater, start) in sorted(state.open_prompts):
        if tick >= start + spec.rating_interval:
            del state.open_prompts[(rater, start)]
            ratings.extend(
                rate_teammates(
                    state.policies[rater], state.beliefs[rater], tick,
                    spec=spec, world=state.world, last_tasks=state.last_tasks[rater],
                    source="default", window_start=start,
                )
            )
    if tick % spec.rating_interval == 0 and tick > 0:
        for agent_id in roster:
            if state.world.agent(agent_id).controlled_by == "policy":
                ratings.extend(
                    rate_teammates(
                        state.policies[agent_id], state.beliefs[agent_id], tick,
                        spec=spec, world=state.world, last_tasks=state.last_tasks[agent_id],
                    )
                )
            else:
                state.open_prompts[(agent_id, tick)] = tick + spec.rating_interval

    # 6. satisficing gate, ladders, snapshot
    state.gate = _evaluate_gate(state)
    for key, edge in state.trust.edges.items():
        state.ladders[key] = ladder_position(component_trust(edge), state.ladders[key])
    state.snapshots.append(_snapshot(state, ratings=ratings))
    return events


def step(state: SimState, external_commands: Sequence[Mapping] = ()) -> list[EventRecord]:
    """Advance one tick with the given queued commands (at most one world
    action per agent; control commands unrestricted)."""
    return _execute_tick(state, external_commands, expected=None)


def run(
    spec: ScenarioSpec,
    seed: int | None = None,
    ticks: int = 1,
    commands_by_tick: Mapping[int, Sequence[Mapping]] | None = None,
) -> SimState:
    if ticks < 1:
        raise ValueError(f"ticks must be >= 1, got {ticks}")
    state = init(spec, seed)
    commands_by_tick = commands_by_tick or {}
    for t in range(1, ticks + 1):
        step(state, commands_by_tick.get(t, ()))
    return state


def trajectory_of(state: SimState) -> Trajectory:
    return Trajectory(
        scenario_digest=state.spec.digest, seed=state.seed, snapshots=state.snapshots
    )


def replay(
    log: Sequence[EventRecord],
    spec: ScenarioSpec,
    seed: int | None = None,
    control_by_tick: Mapping[int, Sequence[Mapping]] | None = None,
) -> Trajectory:
    """Rebuild the trajectory from an event log, verifying every record.

    Control inputs (gate overrides, human ratings) are not world actions and
    do not appear in the event log; pass the recorded control stream for runs
    that had them. A log truncated mid-tick replays up to the last complete
    tick, yielding a prefix of the original trajectory.
    """
    records = list(log)
    for i, record in enumerate(records):
        if record.seq != i + 1:
            raise ReplayMismatch(f"log seq gap at position {i}: got {record.seq}")
    by_tick: dict[int, list[EventRecord]] = {}
    for record in records:
        by_tick.setdefault(record.time, []).append(record)

    roster_size = len(spec.roster())
    ticks = 0
    while len(by_tick.get(ticks + 1, [])) == roster_size:
        ticks += 1

    state = init(spec, seed)
    control_by_tick = control_by_tick or {}
    for t in range(1, ticks + 1):
        _execute_tick(state, control_by_tick.get(t, ()), expected=by_tick[t])
    return trajectory_of(state)


# -- artifacts ----------------------------------------------------------------


def write_log(log: Sequence[EventRecord], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in log:
            fh.write(canonical_json(record.to_dict()) + "\n")
    return path


def read_log(path: str | Path) -> list[EventRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(EventRecord.from_dict(json.loads(line)))
    return records


def csv_header(trajectory: Trajectory) -> list[str]:
    first = trajectory.snapshots[0]
    header = ["tick", "system_trust", "gate_status"]
    for edge in first["trust"]["edges"]:
        pair = f"{edge['trustor']}->{edge['trustee']}"
        header += [
            f"capability:{pair}",
            f"predictability:{pair}",
            f"integrity:{pair}",
            f"rung:{pair}",
        ]
    for goal_id in sorted(first["goal_progress"]):
        header.append(f"goal:{goal_id}")
    return header


def export_metrics(trajectory: Trajectory, format: str, destination: str | Path) -> list[Path]:
    """Flat per-tick table (csv) or the canonical trajectory document (json)."""
    if not trajectory.snapshots:
        raise SimError("empty trajectory")
    destination = Path(destination)
    destination.mkdir(parents=True, exist_ok=True)
    written = []
    if format == "json":
        out = destination / "trajectory.json"
        out.write_text(trajectory.to_json(), encoding="utf-8")
        written.append(out)
    elif format == "csv":
        out = destination / "metrics.csv"
        with out.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(csv_header(trajectory))
            for snap in trajectory.snapshots:
                row = [snap["tick"], snap["trust"]["system_trust"], snap["gate"]["status"]]
                for edge in snap["trust"]["edges"]:
                    row += [
                        edge["capability"],
                        edge["predictability"],
                        edge["integrity"],
                        edge["rung"],
                    ]
                for goal_id in sorted(snap["goal_progress"]):
                    row.append(snap["goal_progress"][goal_id])
                writer.writerow(row)
        written.append(out)
    else:
        raise SimError(f"unknown export format {format!r}")
    return written
