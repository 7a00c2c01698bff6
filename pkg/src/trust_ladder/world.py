"""Grid-world search mission: tags, hazard zones, agent energy, goals/tasks,
action affordances, and the action transition.

The world transition is pure: apply_action returns a new WorldState and never
mutates its input, so replay and property tests can compare states directly.
Outcome randomness is counter-based (a pure function of seed/tick/agent/action)
rather than drawn from a shared stateful generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from .rng import SplitRng

Cell = tuple[int, int]

ROBOT = "robot-field"
HUMAN = "human-field"
COORDINATOR = "human-coordinator"

# tie-break order shared by policies and predictors
KIND_RANK = {"assist": 0, "scan": 1, "move": 2, "recharge": 3, "idle": 4}

OFFSITE: Cell = (-1, -1)  # coordinator "location" in event records


class MissionError(Exception):
    pass


class ActionNotAvailable(MissionError):
    """Stale or inconsistent command; the world state did not change."""


class UnknownAgentError(MissionError):
    pass


class UnknownPrincipleError(MissionError):
    pass


@dataclass
class MissionConstants:
    """Scenario-tunable knobs; defaults are desk-scale."""

    energy_capacity: float = 20.0
    scan_cost: float = 2.0
    assist_cost: float = 5.0
    move_cost: float = 0.0
    reserve_floor: float = 4.0
    recharge_threshold: float = 5.0
    recharge_duration: int = 5
    unsafe_area_cost: float = 5.0
    exertion_cost_threshold: float = 4.0
    assist_radius: int = 2
    default_reliability: float = 0.9


@dataclass
class Grid:
    width: int
    height: int
    hazards: frozenset[Cell] = frozenset()
    recharge_exits: tuple[Cell, ...] = ()

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def kind(self, cell: Cell) -> str:
        if cell in self.hazards:
            return "hazard"
        if cell in self.recharge_exits:
            return "recharge-exit"
        return "safe"


@dataclass
class ARTag:
    id: str
    cell: Cell
    height_class: str  # robot-level | human-level
    info: str  # safe-area | hazard-area | object-operational | object-risky | object-needs-repair
    scanned_by: set[str] = field(default_factory=set)


@dataclass
class AgentState:
    id: str
    kind: str  # robot-field | human-field | human-coordinator
    position: Cell | None = None
    energy: float | None = None  # robots only
    controlled_by: str = "policy"  # policy | external
    reliability: float = 0.9
    score: float = 0.0
    recharging_until: int | None = None


@dataclass
class Task:
    """Abstract unit of work: templates concrete actions and wires goals."""

    id: str
    kind: str  # scan | move | assist | recharge | idle
    target_info: str | None = None  # for scans: "area" or "object"
    cost: float = 0.0
    teammate_impact: str = "none"  # none | helps | harms
    event_weight: float = 0.2  # belief increment when observed performed


@dataclass
class Goal:
    id: str
    label: str
    beneficiary: str  # self | team
    tasks: list[tuple[str, float]]  # (task id, criticality weight), weights sum to 1

    def task_ids(self) -> list[str]:
        return [t for t, _ in self.tasks]

    def weight_of(self, task_id: str) -> float:
        for t, w in self.tasks:
            if t == task_id:
                return w
        return 0.0


@dataclass(frozen=True)
class Action:
    kind: str
    target: Cell | str | None = None
    cost: float = 0.0
    teammate_impact: str = "none"
    task_id: str = ""

    @property
    def ident(self) -> str:
        if self.target is None:
            return self.kind
        if isinstance(self.target, tuple):
            return f"{self.kind}:{self.target[0]},{self.target[1]}"
        return f"{self.kind}:{self.target}"

    def sort_key(self) -> tuple:
        rank = KIND_RANK.get(self.kind, 9)
        if isinstance(self.target, tuple):
            return (rank, 0, self.target)
        return (rank, 1, self.target or "")


@dataclass(frozen=True)
class Context:
    """Where/when/what-was-possible for one agent at one tick."""

    tick: int
    location: Cell
    opportunity: tuple[str, ...]  # idents of the available actions


@dataclass
class EventRecord:
    seq: int
    agent_id: str
    time: int
    location: Cell
    object: str | None
    action: str  # action kind
    outcome: str  # success | failure | rejected
    action_ident: str = ""  # kind:target, enough to replay the exact action

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "agent_id": self.agent_id,
            "time": self.time,
            "location": list(self.location),
            "object": self.object,
            "action": self.action,
            "outcome": self.outcome,
            "action_ident": self.action_ident,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EventRecord":
        return cls(
            seq=doc["seq"],
            agent_id=doc["agent_id"],
            time=doc["time"],
            location=tuple(doc["location"]),
            object=doc.get("object"),
            action=doc["action"],
            outcome=doc["outcome"],
            action_ident=doc.get("action_ident", ""),
        )


@dataclass
class Principle:
    """Hard, binary constraint on permitted actions."""

    id: str
    description: str
    hard: bool = True


PrinciplePredicate = Callable[["WorldState", AgentState, Action, MissionConstants], bool]

_PRINCIPLE_REGISTRY: dict[str, tuple[Principle, PrinciplePredicate]] = {}


def register_principle(id: str, description: str, predicate: PrinciplePredicate) -> Principle:
    principle = Principle(id=id, description=description)
    _PRINCIPLE_REGISTRY[id] = (principle, predicate)
    return principle


def principle_by_id(id: str) -> Principle:
    try:
        return _PRINCIPLE_REGISTRY[id][0]
    except KeyError:
        raise UnknownPrincipleError(f"unknown principle {id!r}") from None


register_principle(
    "no-human-into-hazard",
    "never route a field human into a hazard cell",
    lambda world, agent, action, consts: (
        agent.kind == HUMAN
        and action.kind == "move"
        and isinstance(action.target, tuple)
        and world.grid.kind(action.target) == "hazard"
    ),
)

register_principle(
    "no-scan-below-reserve",
    "never scan while energy is below the reserve floor",
    lambda world, agent, action, consts: (
        action.kind == "scan"
        and agent.energy is not None
        and agent.energy < consts.reserve_floor
    ),
)


@dataclass
class WorldState:
    grid: Grid
    tags: list[ARTag]
    agents: list[AgentState]
    tick: int = 0

    def agent(self, agent_id: str) -> AgentState:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise UnknownAgentError(f"unknown agent {agent_id!r}")

    def tag(self, tag_id: str) -> ARTag:
        for t in self.tags:
            if t.id == tag_id:
                return t
        raise MissionError(f"unknown tag {tag_id!r}")

    def copy(self) -> "WorldState":
        return WorldState(
            grid=self.grid,
            tags=[replace(t, scanned_by=set(t.scanned_by)) for t in self.tags],
            agents=[replace(a) for a in self.agents],
            tick=self.tick,
        )

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "agents": [
                {
                    "id": a.id,
                    "kind": a.kind,
                    "position": list(a.position) if a.position else None,
                    "energy": a.energy,
                    "score": a.score,
                    "recharging_until": a.recharging_until,
                }
                for a in self.agents
            ],
            "tags": [
                {
                    "id": t.id,
                    "cell": list(t.cell),
                    "height_class": t.height_class,
                    "info": t.info,
                    "scanned_by": sorted(t.scanned_by),
                }
                for t in self.tags
            ],
        }


def _manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def _matching_height(agent_kind: str) -> str | None:
    if agent_kind == ROBOT:
        return "robot-level"
    if agent_kind == HUMAN:
        return "human-level"
    return None


class TaskCatalog:
    """Resolves a concrete action to the scenario task that templates it."""

    def __init__(self, tasks: Sequence[Task]):
        self.tasks = list(tasks)
        self.by_id = {t.id: t for t in self.tasks}

    def resolve(self, kind: str, tag_info: str | None = None) -> Task:
        info_class = None
        if tag_info is not None:
            info_class = "area" if tag_info.endswith("-area") else "object"
        for t in self.tasks:
            if t.kind != kind:
                continue
            if t.target_info is None or t.target_info == info_class:
                return t
        return Task(id=kind, kind=kind)

    def resolve_action(self, world: WorldState, action: Action) -> Task:
        if action.kind == "scan" and isinstance(action.target, str):
            return self.resolve("scan", world.tag(action.target).info)
        return self.resolve(action.kind)


def available_actions(
    world: WorldState,
    agent_id: str,
    catalog: TaskCatalog,
    constants: MissionConstants,
) -> list[Action]:
    """Everything the agent can do right now, in deterministic order
    (assist, scan, move, recharge, idle; targets sorted within each kind)."""
    agent = world.agent(agent_id)
    idle_task = catalog.resolve("idle")
    idle = Action("idle", cost=idle_task.cost, teammate_impact=idle_task.teammate_impact,
                  task_id=idle_task.id)
    if agent.position is None:
        return [idle]
    if agent.recharging_until is not None and world.tick < agent.recharging_until:
        return [idle]

    actions: list[Action] = []

    assist_task = catalog.resolve("assist")
    assist_cost = assist_task.cost if agent.energy is not None else 0.0
    for other in world.agents:
        if other.id == agent.id or other.position is None:
            continue
        if other.kind != HUMAN:
            continue  # only humans are endangered by hazard cells
        if world.grid.kind(other.position) != "hazard":
            continue
        if _manhattan(agent.position, other.position) > constants.assist_radius:
            continue
        if agent.energy is not None and agent.energy < assist_cost:
            continue
        actions.append(
            Action("assist", target=other.id, cost=assist_cost,
                   teammate_impact=assist_task.teammate_impact, task_id=assist_task.id)
        )

    height = _matching_height(agent.kind)
    for tag in world.tags:
        if tag.cell != agent.position or tag.height_class != height:
            continue
        if agent.id in tag.scanned_by:
            continue
        task = catalog.resolve("scan", tag.info)
        cost = task.cost if agent.energy is not None else 0.0
        if agent.energy is not None and agent.energy < cost:
            continue
        # a re-scan of a tag someone already read adds nothing for the team
        impact = task.teammate_impact if not tag.scanned_by else "none"
        actions.append(
            Action("scan", target=tag.id, cost=cost,
                   teammate_impact=impact, task_id=task.id)
        )

    move_task = catalog.resolve("move")
    move_cost = move_task.cost if agent.energy is not None else 0.0
    x, y = agent.position
    for dest in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
        if not world.grid.in_bounds(dest):
            continue
        if agent.energy is not None and agent.energy < move_cost:
            continue
        actions.append(
            Action("move", target=dest, cost=move_cost,
                   teammate_impact=move_task.teammate_impact, task_id=move_task.id)
        )

    if (
        agent.kind == ROBOT
        and agent.energy is not None
        and agent.energy < constants.recharge_threshold
        and world.grid.recharge_exits
    ):
        task = catalog.resolve("recharge")
        actions.append(
            Action("recharge", cost=task.cost, teammate_impact=task.teammate_impact,
                   task_id=task.id)
        )

    actions.append(idle)
    return sorted(actions, key=Action.sort_key)


def make_context(world: WorldState, agent_id: str, actions: Iterable[Action]) -> Context:
    agent = world.agent(agent_id)
    return Context(
        tick=world.tick,
        location=agent.position or OFFSITE,
        opportunity=tuple(a.ident for a in actions),
    )


def _nearest_safe_cell(grid: Grid, start: Cell) -> Cell:
    """BFS for the closest non-hazard cell, ties broken by (x, y)."""
    if grid.kind(start) != "hazard":
        return start
    seen = {start}
    frontier = [start]
    while frontier:
        candidates = sorted(c for c in frontier if grid.kind(c) != "hazard")
        if candidates:
            return candidates[0]
        nxt = []
        for (x, y) in sorted(frontier):
            for dest in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
                if grid.in_bounds(dest) and dest not in seen:
                    seen.add(dest)
                    nxt.append(dest)
        frontier = nxt
    return start


def _nearest_recharge_exit(grid: Grid, start: Cell) -> Cell:
    return min(grid.recharge_exits, key=lambda c: (_manhattan(start, c), c))


def apply_action(
    world: WorldState,
    agent_id: str,
    action: Action,
    constants: MissionConstants,
    catalog: TaskCatalog,
    outcome_rng: SplitRng,
    seq: int,
) -> tuple[WorldState, EventRecord, str]:
    """Pure transition: validates availability, applies the effect, returns
    (new world, event record, outcome). Raises ActionNotAvailable on stale
    commands without touching the world. The canonical offered action is the
    one applied, so a command can only name an action, not redefine its cost."""
    offered = available_actions(world, agent_id, catalog, constants)
    match = next((a for a in offered if a.ident == action.ident), None)
    if match is None:
        raise ActionNotAvailable(f"{agent_id}: {action.ident} not available at tick {world.tick}")
    action = match

    new = world.copy()
    agent = new.agent(agent_id)
    outcome = "success"
    obj: str | None = None

    if action.kind == "move":
        assert isinstance(action.target, tuple)
        agent.position = action.target
        if agent.energy is not None:
            agent.energy -= action.cost
    elif action.kind == "scan":
        assert isinstance(action.target, str)
        tag = new.tag(action.target)
        obj = tag.id
        if agent.energy is not None:
            agent.energy -= action.cost
        draw = outcome_rng.uniform(world.tick, agent_id, action.ident)
        if draw < 1.0 - agent.reliability:
            outcome = "failure"
        else:
            tag.scanned_by.add(agent_id)
    elif action.kind == "assist":
        assert isinstance(action.target, str)
        obj = action.target
        helped = new.agent(action.target)
        if helped.position is not None:
            helped.position = _nearest_safe_cell(new.grid, helped.position)
        if agent.energy is not None:
            agent.energy -= action.cost
    elif action.kind == "recharge":
        agent.position = _nearest_recharge_exit(new.grid, agent.position)
        agent.recharging_until = world.tick + constants.recharge_duration
    elif action.kind == "idle":
        pass
    else:
        raise ActionNotAvailable(f"unknown action kind {action.kind!r}")

    if agent.kind == HUMAN and agent.position is not None:
        if new.grid.kind(agent.position) == "hazard":
            agent.score -= constants.unsafe_area_cost

    record = EventRecord(
        seq=seq,
        agent_id=agent_id,
        time=world.tick,
        location=agent.position or OFFSITE,
        object=obj,
        action=action.kind,
        outcome=outcome,
        action_ident=action.ident,
    )
    return new, record, outcome


def advance_tick(world: WorldState, constants: MissionConstants) -> WorldState:
    """Advance time one tick; finish any recharges that come due."""
    new = world.copy()
    new.tick += 1
    for agent in new.agents:
        if agent.recharging_until is not None and new.tick >= agent.recharging_until:
            agent.energy = constants.energy_capacity
            agent.recharging_until = None
    return new


def goal_progress(goal: Goal, completed_tasks: set[str]) -> float:
    """Weighted fraction of the goal's tasks already completed."""
    known = set(goal.task_ids())
    stray = completed_tasks - known
    if stray:
        raise MissionError(f"tasks {sorted(stray)} not part of goal {goal.id!r}")
    return sum(w for t, w in goal.tasks if t in completed_tasks)


def parse_ident(ident: str) -> tuple[str, Cell | str | None]:
    """Split an action ident back into (kind, target)."""
    if ":" not in ident:
        return ident, None
    kind, rest = ident.split(":", 1)
    if kind == "move":
        x, y = rest.split(",")
        return kind, (int(x), int(y))
    return kind, rest


def action_stub(ident: str) -> Action:
    """Minimal action carrying only its identity; apply_action swaps in the
    canonical offered action (cost, impact) on match."""
    kind, target = parse_ident(ident)
    return Action(kind=kind, target=target)


def check_principles(
    world: WorldState,
    agent_id: str,
    action: Action,
    principles: Sequence[Principle],
    constants: MissionConstants,
) -> list[str]:
    """Ids of every principle the action violates, in the order given."""
    agent = world.agent(agent_id)
    violated = []
    for principle in principles:
        entry = _PRINCIPLE_REGISTRY.get(principle.id)
        if entry is None:
            raise UnknownPrincipleError(f"unknown principle {principle.id!r}")
        _, predicate = entry
        if predicate(world, agent, action, constants):
            violated.append(principle.id)
    return violated
