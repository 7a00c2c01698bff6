"""Scripted, myopic decision policies on the selfish<->team value spectrum,
plus teammate action prediction and periodic teammate rating.

A policy scores each available action as lambda*self_reward +
(1-lambda)*team_reward and takes the argmax, ties broken by fixed action-kind
order (assist, scan, move, recharge, idle) then lowest target. Observers
predict a teammate's next action with the same formula, substituting the
teammate's inferred selfishness (mass of self-benefiting goals under the
observer's belief network) for lambda; predictions therefore converge onto
the teammate's true policy as goal inference sharpens.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .bbn import BeliefNetwork
from .rng import SplitRng
from .scenario import RewardTable, ScenarioSpec, context_evidence
from .trust import infer_goal
from .world import (
    Action,
    AgentState,
    WorldState,
    available_actions,
)


class PolicyError(Exception):
    pass


@dataclass
class Policy:
    agent_id: str
    lambda_selfish: float = 0.5
    prediction_horizon: int = 1  # myopic

    def __post_init__(self):
        if not 0.0 <= self.lambda_selfish <= 1.0:
            raise PolicyError(f"lambda {self.lambda_selfish!r} outside [0, 1]")


@dataclass
class RatingRecord:
    rater: str
    ratee: str
    tick: int
    expectation: str  # selfish-goal | team-goal | unsure
    source: str = "policy"  # policy | human | default
    window_start: int = 0

    def to_dict(self) -> dict:
        return {
            "rater": self.rater,
            "ratee": self.ratee,
            "tick": self.tick,
            "expectation": self.expectation,
            "source": self.source,
            "window_start": self.window_start,
        }


def _manhattan(a: tuple[int, int], b: tuple[int, int]) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def _team_target_cells(world: WorldState, agent: AgentState) -> list[tuple[int, int]]:
    """Cells where team-relevant work waits: fresh tags this agent could scan
    and humans stuck in hazard cells (robots tolerate hazard)."""
    height = "robot-level" if agent.kind == "robot-field" else "human-level"
    cells = [
        tag.cell
        for tag in world.tags
        if tag.height_class == height and not tag.scanned_by
    ]
    for other in world.agents:
        if other.id == agent.id or other.position is None or other.kind != "human-field":
            continue
        if world.grid.kind(other.position) == "hazard":
            cells.append(other.position)
    return cells


def score_action(
    action: Action,
    lam: float,
    world: WorldState,
    agent: AgentState,
    rewards: RewardTable,
) -> float:
    """lambda-weighted myopic score of one available action."""
    if action.kind == "idle":
        self_reward = rewards.self_idle
    elif action.kind == "recharge":
        self_reward = rewards.self_recharge
    else:
        self_reward = -action.cost

    team_reward = 0.0
    if action.kind == "idle":
        team_reward = rewards.team_idle
    if action.kind == "scan" and isinstance(action.target, str):
        if not world.tag(action.target).scanned_by:
            team_reward = rewards.team_scan
    elif action.kind == "assist":
        team_reward = rewards.team_assist
    elif action.kind == "recharge":
        team_reward = rewards.team_recharge
    elif action.kind == "move" and isinstance(action.target, tuple):
        if agent.kind == "human-field" and world.grid.kind(action.target) == "hazard":
            team_reward = -rewards.team_hazard_penalty
        else:
            targets = _team_target_cells(world, agent)
            if targets and agent.position is not None:
                before = min(_manhattan(agent.position, c) for c in targets)
                after = min(_manhattan(action.target, c) for c in targets)
                if after < before:
                    team_reward = rewards.team_approach

    return lam * self_reward + (1.0 - lam) * team_reward


def _argmax(actions: Sequence[Action], scores: Sequence[float]) -> Action:
    best = max(scores)
    tied = [a for a, s in zip(actions, scores) if s == best]
    return min(tied, key=Action.sort_key)


def choose_action(
    policy: Policy,
    world: WorldState,
    agent_id: str,
    rng: SplitRng,
    *,
    spec: ScenarioSpec,
) -> Action:
    """Argmax of the lambda-weighted score over the available set."""
    agent = world.agent(agent_id)
    actions = available_actions(world, agent_id, spec.catalog, spec.constants)
    if not actions:
        raise PolicyError(f"{agent_id} has an empty action set at tick {world.tick}")
    scores = [
        score_action(a, policy.lambda_selfish, world, agent, spec.rewards) for a in actions
    ]
    return _argmax(actions, scores)


def selfish_mass(goal_dist: Mapping[str, float], spec: ScenarioSpec) -> float:
    """Probability mass on self-benefiting goals."""
    by_id = {g.id: g for g in spec.goals}
    return sum(p for gid, p in goal_dist.items() if by_id[gid].beneficiary == "self")


def predict_teammate_action(
    observer_net: BeliefNetwork,
    world: WorldState,
    teammate: str,
    last_task: str | None,
    *,
    spec: ScenarioSpec,
) -> Action:
    """Expected next action of a teammate under the observer's beliefs.

    The inferred goal distribution (conditioned on the teammate's last
    observed task and the current context) yields an estimated selfishness,
    which is then run through the same scoring rule policies use.
    """
    agent = world.agent(teammate)
    actions = available_actions(world, teammate, spec.catalog, spec.constants)
    dist = infer_goal(observer_net, last_task, context_evidence(spec, world))
    lam_hat = selfish_mass(dist, spec)
    scores = [score_action(a, lam_hat, world, agent, spec.rewards) for a in actions]
    return _argmax(actions, scores)


def expectation_of(goal_dist: Mapping[str, float], spec: ScenarioSpec) -> str:
    s = selfish_mass(goal_dist, spec)
    if s > spec.rating_threshold:
        return "selfish-goal"
    if 1.0 - s > spec.rating_threshold:
        return "team-goal"
    return "unsure"


def rate_teammates(
    policy: Policy,
    observer_net: BeliefNetwork,
    tick: int,
    *,
    spec: ScenarioSpec,
    world: WorldState,
    last_tasks: Mapping[str, str | None],
    source: str = "policy",
    window_start: int | None = None,
) -> list[RatingRecord]:
    """One rating per teammate: which kind of goal do they seem to pursue."""
    if window_start is None:
        if tick % spec.rating_interval != 0 or tick == 0:
            raise PolicyError(f"tick {tick} is not a rating interval")
        window_start = tick
    records = []
    for other in spec.roster():
        if other == policy.agent_id:
            continue
        dist = infer_goal(
            observer_net, last_tasks.get(other), context_evidence(spec, world)
        )
        records.append(
            RatingRecord(
                rater=policy.agent_id,
                ratee=other,
                tick=tick,
                expectation=expectation_of(dist, spec),
                source=source,
                window_start=window_start,
            )
        )
    return records
