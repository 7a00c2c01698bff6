"""Directed trust edges and their dynamics.

Each ordered (trustor, trustee) pair carries running capability,
predictability and integrity estimates in [0, 1]. Capability and
predictability move by exponential moving average; integrity moves by
bounded additive steps driven by a rule-table judgment of each situated
action. Component trust is the minimum of the three elements and
system trust the minimum over pairs, so the weakest link always binds.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .bbn import BeliefNetwork, NetworkSpecError, UnknownNodeError, query_posterior
from .world import (
    HUMAN,
    Action,
    Context,
    EventRecord,
    MissionConstants,
    Principle,
    WorldState,
    check_principles,
)

EdgeKey = tuple[str, str]

ELEMENTS = ("capability", "predictability", "integrity")

DEFAULT_ALPHA = 0.2  # EMA step for capability/predictability
DEFAULT_BETA = 0.1  # additive step per unit of judgment score

LADDER_BOUNDARIES = (0.2, 0.4, 0.6, 0.8)
LADDER_RUNGS = 5
LADDER_HYSTERESIS = 0.05


class TrustError(Exception):
    pass


class ObservationMismatch(TrustError):
    """The judged action was not in the actor's available set."""


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


@dataclass
class TrustEdge:
    trustor: str
    trustee: str
    capability: float = 0.5
    predictability: float = 0.5
    integrity: float = 0.5

    def __post_init__(self):
        if self.trustor == self.trustee:
            raise TrustError("an agent holds no trust edge toward itself")

    @property
    def key(self) -> EdgeKey:
        return (self.trustor, self.trustee)

    def element(self, name: str) -> float:
        if name not in ELEMENTS:
            raise TrustError(f"unknown trust element {name!r}")
        return getattr(self, name)


@dataclass
class TrustNetwork:
    """Complete directed graph over the roster, minus self-loops."""

    edges: dict[EdgeKey, TrustEdge]

    @classmethod
    def complete(
        cls,
        roster: Sequence[str],
        priors: Mapping[EdgeKey, tuple[float, float, float]] | None = None,
        default: tuple[float, float, float] = (0.5, 0.5, 0.5),
    ) -> "TrustNetwork":
        edges = {}
        for trustor in roster:
            for trustee in roster:
                if trustor == trustee:
                    continue
                c, p, i = (priors or {}).get((trustor, trustee), default)
                edges[(trustor, trustee)] = TrustEdge(trustor, trustee, c, p, i)
        return cls(edges=edges)

    def edge(self, trustor: str, trustee: str) -> TrustEdge:
        try:
            return self.edges[(trustor, trustee)]
        except KeyError:
            raise TrustError(f"no edge {trustor!r} -> {trustee!r}") from None


@dataclass
class IntegrityJudgment:
    actor: str
    event: int  # event seq that was judged
    score: float  # in [-1, 1]
    basis: str

    BASES = (
        "principle-violation",
        "selfish-with-team-alternative",
        "selfish-no-impact",
        "team-benefit",
        "exertion-for-team",
    )


@dataclass
class Reputation:
    """Per-observer, mission-bounded aggregate of integrity judgments."""

    observer: str
    actor: str
    history: list[IntegrityJudgment] = field(default_factory=list)
    summary: float = 0.5

    @staticmethod
    def summarize(history: Sequence[IntegrityJudgment]) -> float:
        if not history:
            return 0.5
        mean = sum(j.score for j in history) / len(history)
        return _clamp01(0.5 + mean / 2.0)


@dataclass
class ValueProfile:
    agent_id: str
    lambda_selfish: float = 0.5  # weight on self reward; 1-lambda on team reward

    def __post_init__(self):
        if not 0.0 <= self.lambda_selfish <= 1.0:
            raise TrustError(f"lambda {self.lambda_selfish!r} outside [0, 1]")


@dataclass
class LadderPosition:
    edge: EdgeKey
    rung: int
    rungs: int = LADDER_RUNGS


@dataclass
class Deficiency:
    edge: EdgeKey
    element: str
    value: float
    threshold: float

    def to_dict(self) -> dict:
        return {
            "edge": list(self.edge),
            "element": self.element,
            "value": self.value,
            "threshold": self.threshold,
        }


@dataclass
class GateDecision:
    proceed: bool
    deficiencies: list[Deficiency] = field(default_factory=list)
    overridden: bool = False

    @property
    def status(self) -> str:
        if self.proceed:
            return "proceed-overridden" if self.overridden else "proceed"
        return "blocked"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "deficiencies": [d.to_dict() for d in self.deficiencies],
        }


# -- integrity ---------------------------------------------------------------


def judge_integrity(
    event: EventRecord,
    context: Context,
    values: ValueProfile,
    principles: Sequence[Principle],
    alternatives: Sequence[Action],
    *,
    world: WorldState,
    constants: MissionConstants,
) -> IntegrityJudgment:
    """Score one situated action against principles and team benefit.

    Rule table: principle violation -1; selfish while a team-benefiting
    alternative existed -0.5; selfish with no teammate impact 0; team-benefit
    +0.5; team-benefit at high self cost +1.
    """
    taken = None
    for alt in alternatives:
        if alt.ident == event.action_ident:
            taken = alt
            break
    if taken is None:
        raise ObservationMismatch(
            f"{event.agent_id}: observed {event.action_ident!r} not in the available set"
        )

    violated = check_principles(world, event.agent_id, taken, principles, constants)
    if violated:
        return IntegrityJudgment(event.agent_id, event.seq, -1.0, "principle-violation")

    if taken.teammate_impact == "helps":
        self_cost = taken.cost
        agent = world.agent(event.agent_id)
        if agent.kind == HUMAN and world.grid.kind(event.location) == "hazard":
            self_cost += constants.unsafe_area_cost
        if self_cost >= constants.exertion_cost_threshold:
            return IntegrityJudgment(event.agent_id, event.seq, 1.0, "exertion-for-team")
        return IntegrityJudgment(event.agent_id, event.seq, 0.5, "team-benefit")

    team_alternative = any(
        alt.teammate_impact == "helps" and alt.ident != taken.ident for alt in alternatives
    )
    if team_alternative:
        return IntegrityJudgment(
            event.agent_id, event.seq, -0.5, "selfish-with-team-alternative"
        )
    return IntegrityJudgment(event.agent_id, event.seq, 0.0, "selfish-no-impact")


def update_integrity(
    edge: TrustEdge,
    judgment: IntegrityJudgment,
    reputation: Reputation,
    beta: float = DEFAULT_BETA,
) -> tuple[TrustEdge, Reputation]:
    if judgment.actor != edge.trustee:
        raise TrustError(
            f"judgment of {judgment.actor!r} cannot update edge toward {edge.trustee!r}"
        )
    edge.integrity = _clamp01(edge.integrity + beta * judgment.score)
    reputation.history.append(judgment)
    reputation.summary = Reputation.summarize(reputation.history)
    return edge, reputation


# -- capability / predictability ----------------------------------------------


def update_capability(
    edge: TrustEdge,
    success: bool,
    task_difficulty: float = 0.5,
    alpha: float = DEFAULT_ALPHA,
) -> TrustEdge:
    """EMA toward 1 on success, toward 0 on failure.

    task_difficulty is carried for future weighting but does not move the
    estimate: successes must never decrease capability.
    """
    outcome_value = 1.0 if success else 0.0
    edge.capability = (1.0 - alpha) * edge.capability + alpha * outcome_value
    return edge


def update_predictability(
    edge: TrustEdge, predicted: str, observed: str, alpha: float = DEFAULT_ALPHA
) -> TrustEdge:
    match = 1.0 if predicted == observed else 0.0
    edge.predictability = (1.0 - alpha) * edge.predictability + alpha * match
    return edge


# -- aggregation ---------------------------------------------------------------


def component_trust(edge: TrustEdge) -> float:
    return min(edge.capability, edge.predictability, edge.integrity)


def system_trust(network: TrustNetwork, members: Iterable[str]) -> float:
    roster = list(members)
    if len(roster) < 2:
        raise TrustError("system trust needs at least 2 members")
    values = [
        component_trust(network.edge(a, b)) for a in roster for b in roster if a != b
    ]
    return min(values)


def satisfice(
    network: TrustNetwork,
    required_edges: Sequence[EdgeKey],
    thresholds: Mapping[str, float],
) -> GateDecision:
    """Proceed iff every required edge clears every element threshold;
    otherwise Blocked with the complete deficiency list."""
    for name in thresholds:
        if name not in ELEMENTS:
            raise TrustError(f"unknown trust element {name!r} in thresholds")
    deficiencies = []
    for key in required_edges:
        edge = network.edge(*key)
        for element in ELEMENTS:
            minimum = thresholds.get(element, 0.0)
            value = edge.element(element)
            if value < minimum:
                deficiencies.append(Deficiency(key, element, value, minimum))
    return GateDecision(proceed=not deficiencies, deficiencies=deficiencies)


# -- ladder --------------------------------------------------------------------


def raw_rung(trust: float) -> int:
    return bisect_right(LADDER_BOUNDARIES, trust)


def ladder_position(trust: float, previous: LadderPosition | None, edge: EdgeKey | None = None) -> LadderPosition:
    """Quantize trust onto the 5-rung ladder with hysteresis: changing rung
    requires clearing a boundary by more than the hysteresis margin."""
    if not 0.0 <= trust <= 1.0:
        raise TrustError(f"trust {trust!r} outside [0, 1]")
    if previous is None:
        key = edge if edge is not None else ("", "")
        return LadderPosition(edge=key, rung=raw_rung(trust))
    prev = previous.rung
    up = [
        q
        for q in range(prev + 1, LADDER_RUNGS)
        if trust > LADDER_BOUNDARIES[q - 1] + LADDER_HYSTERESIS
    ]
    if up:
        return LadderPosition(edge=previous.edge, rung=max(up), rungs=previous.rungs)
    down = [
        q for q in range(prev) if trust < LADDER_BOUNDARIES[q] - LADDER_HYSTERESIS
    ]
    if down:
        return LadderPosition(edge=previous.edge, rung=min(down), rungs=previous.rungs)
    return LadderPosition(edge=previous.edge, rung=prev, rungs=previous.rungs)


# -- goal inference --------------------------------------------------------------


def infer_goal(
    observer_net: BeliefNetwork,
    observed_task: str | None,
    context_evidence: Mapping[str, str] | None = None,
) -> dict[str, float]:
    """Normalized distribution over goal-role nodes given an observed task.

    Evidence is the observed task node set to its positive (first) state plus
    any context node states supplied. With no observed task the distribution
    falls back to prior goal marginals under the context evidence alone.
    """
    goal_nodes = [
        n for n in observer_net.topological_order() if observer_net.nodes[n].role == "goal"
    ]
    if not goal_nodes:
        raise NetworkSpecError("network has no goal-role nodes")
    evidence = dict(context_evidence or {})
    if observed_task is not None:
        if (
            observed_task not in observer_net.nodes
            or observer_net.nodes[observed_task].role != "task"
        ):
            raise UnknownNodeError(f"task {observed_task!r} unknown to the network")
        evidence[observed_task] = observer_net.nodes[observed_task].states[0]
    masses = {}
    for g in goal_nodes:
        posterior = query_posterior(observer_net, g, evidence)
        masses[g] = posterior[0]
    total = sum(masses.values())
    if total <= 0.0:
        uniform = 1.0 / len(goal_nodes)
        return {g: uniform for g in goal_nodes}
    return {g: m / total for g, m in masses.items()}


# -- serialization ----------------------------------------------------------------


def trust_snapshot(
    network: TrustNetwork,
    rungs: Mapping[EdgeKey, LadderPosition],
    members: Sequence[str],
) -> dict:
    edges = []
    for key in sorted(network.edges):
        edge = network.edges[key]
        entry = {
            "trustor": edge.trustor,
            "trustee": edge.trustee,
            "capability": edge.capability,
            "predictability": edge.predictability,
            "integrity": edge.integrity,
            "rung": rungs[key].rung if key in rungs else raw_rung(component_trust(edge)),
        }
        edges.append(entry)
    return {"edges": edges, "system_trust": system_trust(network, members)}
