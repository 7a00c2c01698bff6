"""Scenario files: schema, validation, and the wiring they induce.

A scenario is a single JSON document (see docs/scenario.md) describing the
grid, tags, roster, goals/tasks, principles, value profiles, gate thresholds,
tunable constants, the rating interval, and the master seed. Unknown keys are
rejected anywhere in the document. The same file also determines the shape of
every observer's belief network: one context root, one task node per task,
one goal node per goal (parents: its tasks), and a reputation root feeding a
capability node.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .bbn import BeliefNetwork, NodeSpec, build_network
from .trust import ValueProfile
from .world import (
    HUMAN,
    ROBOT,
    AgentState,
    ARTag,
    Goal,
    Grid,
    MissionConstants,
    Principle,
    Task,
    TaskCatalog,
    WorldState,
    principle_by_id,
)

WEIGHT_TOL = 1e-9

_CELL = {
    "type": "array",
    "items": {"type": "integer", "minimum": 0},
    "minItems": 2,
    "maxItems": 2,
}

_CONSTANT_KEYS = {
    "energy_capacity": {"type": "number", "exclusiveMinimum": 0},
    "scan_cost": {"type": "number", "minimum": 0},
    "assist_cost": {"type": "number", "minimum": 0},
    "move_cost": {"type": "number", "minimum": 0},
    "reserve_floor": {"type": "number", "minimum": 0},
    "recharge_threshold": {"type": "number", "minimum": 0},
    "recharge_duration": {"type": "integer", "minimum": 1},
    "unsafe_area_cost": {"type": "number", "minimum": 0},
    "exertion_cost_threshold": {"type": "number", "minimum": 0},
    "assist_radius": {"type": "integer", "minimum": 0},
    "default_reliability": {"type": "number", "minimum": 0, "maximum": 1},
    "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    "beta": {"type": "number", "minimum": 0, "maximum": 1},
    "rating_threshold": {"type": "number", "minimum": 0.5, "maximum": 1},
    "share_judgments": {"type": "boolean"},
    "observability_radius": {"type": ["integer", "null"], "minimum": 0},
    "capability_task_kinds": {"type": "array", "items": {"type": "string"}},
    "rewards": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "self_idle": {"type": "number"},
            "self_recharge": {"type": "number"},
            "team_scan": {"type": "number"},
            "team_assist": {"type": "number"},
            "team_recharge": {"type": "number"},
            "team_approach": {"type": "number"},
            "team_idle": {"type": "number"},
            "team_hazard_penalty": {"type": "number"},
        },
    },
    "trust_priors": {
        "type": "array",
        "items": {
            "type": "object",
            "additionalProperties": False,
            "required": ["trustor", "trustee"],
            "properties": {
                "trustor": {"type": "string"},
                "trustee": {"type": "string"},
                "capability": {"type": "number", "minimum": 0, "maximum": 1},
                "predictability": {"type": "number", "minimum": 0, "maximum": 1},
                "integrity": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
    },
    "bbn": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "context_states": {
                "type": "array",
                "items": {"type": "string"},
                "minItems": 2,
            },
            "context_prior": {"type": "array", "items": {"type": "number"}},
            "task_given_context": {
                "type": "object",
                "additionalProperties": {
                    "type": "array",
                    "items": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["grid", "agents", "goals", "tasks", "seed"],
    "properties": {
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["width", "height"],
            "properties": {
                "width": {"type": "integer", "minimum": 1},
                "height": {"type": "integer", "minimum": 1},
                "hazards": {"type": "array", "items": _CELL},
                "recharge_exits": {"type": "array", "items": _CELL},
            },
        },
        "tags": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "cell", "height_class", "info"],
                "properties": {
                    "id": {"type": "string"},
                    "cell": _CELL,
                    "height_class": {"enum": ["robot-level", "human-level"]},
                    "info": {
                        "enum": [
                            "safe-area",
                            "hazard-area",
                            "object-operational",
                            "object-risky",
                            "object-needs-repair",
                        ]
                    },
                },
            },
        },
        "agents": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "kind"],
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": [ROBOT, HUMAN, "human-coordinator"]},
                    "position": {"oneOf": [_CELL, {"type": "null"}]},
                    "energy": {"type": ["number", "null"], "minimum": 0},
                    "controlled_by": {"enum": ["policy", "external"]},
                    "reliability": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
        "goals": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "label", "beneficiary", "tasks"],
                "properties": {
                    "id": {"type": "string"},
                    "label": {"type": "string"},
                    "beneficiary": {"enum": ["self", "team"]},
                    "tasks": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "array",
                            "prefixItems": [
                                {"type": "string"},
                                {"type": "number", "exclusiveMinimum": 0},
                            ],
                            "minItems": 2,
                            "maxItems": 2,
                        },
                    },
                },
            },
        },
        "tasks": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "kind"],
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": ["scan", "move", "assist", "recharge", "idle"]},
                    "target_info": {"enum": ["area", "object", None]},
                    "cost": {"type": "number", "minimum": 0},
                    "teammate_impact": {"enum": ["none", "helps", "harms"]},
                    "event_weight": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
        "principles": {"type": "array", "items": {"type": "string"}},
        "values": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["agent", "lambda_selfish"],
                "properties": {
                    "agent": {"type": "string"},
                    "lambda_selfish": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
        "thresholds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "capability": {"type": "number", "minimum": 0, "maximum": 1},
                "predictability": {"type": "number", "minimum": 0, "maximum": 1},
                "integrity": {"type": "number", "minimum": 0, "maximum": 1},
                "required_edges": {
                    "oneOf": [
                        {"const": "all"},
                        {
                            "type": "array",
                            "items": {
                                "type": "array",
                                "items": {"type": "string"},
                                "minItems": 2,
                                "maxItems": 2,
                            },
                        },
                    ]
                },
            },
        },
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": _CONSTANT_KEYS,
        },
        "rating_interval": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
}


class ScenarioError(Exception):
    """Scenario document rejected; message carries the offending key path."""


@dataclass
class RewardTable:
    """Myopic action scoring constants; only ordinal relations matter."""

    self_idle: float = 0.5
    self_recharge: float = 2.0
    team_scan: float = 3.0
    team_assist: float = 5.0
    team_recharge: float = 2.0
    team_approach: float = 1.0
    team_idle: float = 0.2  # resting is mildly predictable, not harmful
    team_hazard_penalty: float = 5.0  # deters humans from stepping into hazard


@dataclass
class BbnWiring:
    context_states: list[str] = field(default_factory=lambda: ["routine", "assist-needed"])
    context_prior: list[float] = field(default_factory=lambda: [0.85, 0.15])
    task_given_context: dict[str, list[float]] = field(default_factory=dict)


_TASK_CONTEXT_DEFAULTS = {
    "scan": [0.35, 0.2],
    "assist": [0.05, 0.6],
    "recharge": [0.1, 0.05],
    "idle": [0.3, 0.1],
    "move": [0.5, 0.4],
}


@dataclass
class ScenarioSpec:
    grid: Grid
    tags: list[ARTag]
    agents: list[AgentState]
    goals: list[Goal]
    tasks: list[Task]
    principles: list[Principle]
    values: dict[str, ValueProfile]
    thresholds: dict[str, float]
    required_edges: list[tuple[str, str]]
    constants: MissionConstants
    alpha: float
    beta: float
    rating_threshold: float
    rating_interval: int
    seed: int
    rewards: RewardTable
    trust_priors: dict[tuple[str, str], tuple[float, float, float]]
    share_judgments: bool
    observability_radius: int | None
    capability_task_kinds: tuple[str, ...]
    bbn: BbnWiring
    digest: str

    @property
    def catalog(self) -> TaskCatalog:
        return TaskCatalog(self.tasks)

    def roster(self) -> list[str]:
        return [a.id for a in self.agents]

    def field_agents(self) -> list[str]:
        return [a.id for a in self.agents if a.kind in (ROBOT, HUMAN)]

    def value_profile(self, agent_id: str) -> ValueProfile:
        return self.values.get(agent_id, ValueProfile(agent_id, 0.5))

    def initial_world(self) -> WorldState:
        return WorldState(
            grid=self.grid,
            tags=[ARTag(t.id, t.cell, t.height_class, t.info, set()) for t in self.tags],
            agents=[
                AgentState(
                    id=a.id,
                    kind=a.kind,
                    position=a.position,
                    energy=a.energy,
                    controlled_by=a.controlled_by,
                    reliability=a.reliability,
                )
                for a in self.agents
            ],
            tick=0,
        )


def _fail(path: list, message: str) -> ScenarioError:
    where = "$" + "".join(
        f"[{p}]" if isinstance(p, int) else f".{p}" for p in path
    )
    return ScenarioError(f"{where}: {message}")


def load_scenario(source: str | Path | dict) -> ScenarioSpec:
    """Parse and validate a scenario document (path or already-parsed dict)."""
    if isinstance(source, (str, Path)):
        raw = Path(source).read_text(encoding="utf-8")
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"$: not valid JSON ({exc})") from exc
    else:
        doc = source

    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise _fail(list(err.absolute_path), err.message)

    digest = hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()

    consts_doc = dict(doc.get("constants", {}))
    rewards = RewardTable(**consts_doc.pop("rewards", {}))
    trust_priors_doc = consts_doc.pop("trust_priors", [])
    bbn_doc = consts_doc.pop("bbn", {})
    alpha = consts_doc.pop("alpha", 0.2)
    beta = consts_doc.pop("beta", 0.1)
    rating_threshold = consts_doc.pop("rating_threshold", 0.6)
    share_judgments = consts_doc.pop("share_judgments", False)
    observability_radius = consts_doc.pop("observability_radius", None)
    capability_task_kinds = tuple(consts_doc.pop("capability_task_kinds", ["scan", "assist"]))
    constants = MissionConstants(**consts_doc)

    grid_doc = doc["grid"]
    grid = Grid(
        width=grid_doc["width"],
        height=grid_doc["height"],
        hazards=frozenset(tuple(c) for c in grid_doc.get("hazards", [])),
        recharge_exits=tuple(sorted(tuple(c) for c in grid_doc.get("recharge_exits", []))),
    )
    for i, cell in enumerate(grid_doc.get("hazards", [])):
        if not grid.in_bounds(tuple(cell)):
            raise _fail(["grid", "hazards", i], f"cell {cell} out of bounds")
    for i, cell in enumerate(grid_doc.get("recharge_exits", [])):
        if not grid.in_bounds(tuple(cell)):
            raise _fail(["grid", "recharge_exits", i], f"cell {cell} out of bounds")

    tags = []
    seen_tags = set()
    for i, t in enumerate(doc.get("tags", [])):
        if t["id"] in seen_tags:
            raise _fail(["tags", i, "id"], f"duplicate tag id {t['id']!r}")
        seen_tags.add(t["id"])
        cell = tuple(t["cell"])
        if not grid.in_bounds(cell):
            raise _fail(["tags", i, "cell"], f"cell {list(cell)} out of bounds")
        tags.append(ARTag(t["id"], cell, t["height_class"], t["info"]))

    agents = []
    seen_agents = set()
    for i, a in enumerate(doc["agents"]):
        if a["id"] in seen_agents:
            raise _fail(["agents", i, "id"], f"duplicate agent id {a['id']!r}")
        seen_agents.add(a["id"])
        kind = a["kind"]
        position = tuple(a["position"]) if a.get("position") is not None else None
        if kind in (ROBOT, HUMAN):
            if position is None:
                raise _fail(["agents", i, "position"], f"{kind} agents need a position")
            if not grid.in_bounds(position):
                raise _fail(["agents", i, "position"], f"cell {list(position)} out of bounds")
        energy = a.get("energy")
        if kind == ROBOT and energy is None:
            energy = constants.energy_capacity
        if kind != ROBOT and energy is not None:
            raise _fail(["agents", i, "energy"], "only robots track energy")
        agents.append(
            AgentState(
                id=a["id"],
                kind=kind,
                position=position,
                energy=energy,
                controlled_by=a.get("controlled_by", "policy"),
                reliability=a.get("reliability", constants.default_reliability),
            )
        )

    tasks = []
    seen_tasks = set()
    for i, t in enumerate(doc["tasks"]):
        if t["id"] in seen_tasks:
            raise _fail(["tasks", i, "id"], f"duplicate task id {t['id']!r}")
        seen_tasks.add(t["id"])
        tasks.append(
            Task(
                id=t["id"],
                kind=t["kind"],
                target_info=t.get("target_info"),
                cost=t.get("cost", 0.0),
                teammate_impact=t.get("teammate_impact", "none"),
                event_weight=t.get("event_weight", 0.2),
            )
        )

    goals = []
    seen_goals = set()
    for i, g in enumerate(doc["goals"]):
        if g["id"] in seen_goals:
            raise _fail(["goals", i, "id"], f"duplicate goal id {g['id']!r}")
        seen_goals.add(g["id"])
        pairs = [(t[0], float(t[1])) for t in g["tasks"]]
        for j, (tid, _) in enumerate(pairs):
            if tid not in seen_tasks:
                raise _fail(["goals", i, "tasks", j], f"unknown task {tid!r}")
        total = sum(w for _, w in pairs)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise _fail(["goals", i, "tasks"], f"criticality weights sum to {total}, not 1")
        goals.append(Goal(g["id"], g["label"], g["beneficiary"], pairs))

    principles = [principle_by_id(pid) for pid in doc.get("principles", [])]

    values = {}
    for i, v in enumerate(doc.get("values", [])):
        if v["agent"] not in seen_agents:
            raise _fail(["values", i, "agent"], f"unknown agent {v['agent']!r}")
        values[v["agent"]] = ValueProfile(v["agent"], v["lambda_selfish"])

    thresholds_doc = dict(doc.get("thresholds", {}))
    required_doc = thresholds_doc.pop("required_edges", "all")
    thresholds = {k: float(v) for k, v in thresholds_doc.items()}
    roster = [a.id for a in agents]
    if required_doc == "all":
        required_edges = [(a, b) for a in roster for b in roster if a != b]
    else:
        required_edges = []
        for i, pair in enumerate(required_doc):
            trustor, trustee = pair
            for who in (trustor, trustee):
                if who not in seen_agents:
                    raise _fail(["thresholds", "required_edges", i], f"unknown agent {who!r}")
            if trustor == trustee:
                raise _fail(["thresholds", "required_edges", i], "self edge not allowed")
            required_edges.append((trustor, trustee))

    trust_priors = {}
    for i, p in enumerate(trust_priors_doc):
        for who in (p["trustor"], p["trustee"]):
            if who not in seen_agents:
                raise _fail(["constants", "trust_priors", i], f"unknown agent {who!r}")
        trust_priors[(p["trustor"], p["trustee"])] = (
            p.get("capability", 0.5),
            p.get("predictability", 0.5),
            p.get("integrity", 0.5),
        )

    wiring = BbnWiring()
    if "context_states" in bbn_doc:
        wiring.context_states = list(bbn_doc["context_states"])
    if "context_prior" in bbn_doc:
        wiring.context_prior = [float(x) for x in bbn_doc["context_prior"]]
    if len(wiring.context_prior) != len(wiring.context_states):
        raise _fail(["constants", "bbn", "context_prior"], "length must match context_states")
    if abs(sum(wiring.context_prior) - 1.0) > WEIGHT_TOL:
        raise _fail(["constants", "bbn", "context_prior"], "must sum to 1")
    for tid, probs in bbn_doc.get("task_given_context", {}).items():
        if tid not in seen_tasks:
            raise _fail(["constants", "bbn", "task_given_context", tid], "unknown task")
        if len(probs) != len(wiring.context_states):
            raise _fail(
                ["constants", "bbn", "task_given_context", tid],
                "needs one probability per context state",
            )
        wiring.task_given_context[tid] = [float(x) for x in probs]

    return ScenarioSpec(
        grid=grid,
        tags=tags,
        agents=agents,
        goals=goals,
        tasks=tasks,
        principles=principles,
        values=values,
        thresholds=thresholds,
        required_edges=required_edges,
        constants=constants,
        alpha=alpha,
        beta=beta,
        rating_threshold=rating_threshold,
        rating_interval=doc.get("rating_interval", 10),
        seed=doc["seed"],
        rewards=rewards,
        trust_priors=trust_priors,
        share_judgments=share_judgments,
        observability_radius=observability_radius,
        capability_task_kinds=capability_task_kinds,
        bbn=wiring,
        digest=digest,
    )


def _clip(p: float, lo: float = 0.02, hi: float = 0.98) -> float:
    return min(hi, max(lo, p))


def build_observer_network(spec: ScenarioSpec) -> BeliefNetwork:
    """One observer's belief network: context root, one task node per task,
    one goal node per goal (parents: its tasks), reputation root, and a
    capability node fed by goals and reputation.

    Convention: state 0 is the positive state everywhere (performed, pursued,
    capable, high).
    """
    specs = [
        NodeSpec(
            "context",
            list(spec.bbn.context_states),
            [],
            [list(spec.bbn.context_prior)],
            role="context",
        )
    ]
    for task in spec.tasks:
        probs = spec.bbn.task_given_context.get(
            task.id, _TASK_CONTEXT_DEFAULTS.get(task.kind, [0.3, 0.3])
        )
        cpt = [[_clip(p), 1.0 - _clip(p)] for p in probs]
        specs.append(
            NodeSpec(task.id, ["performed", "not-performed"], ["context"], cpt, role="task")
        )
    for goal in spec.goals:
        parents = goal.task_ids()
        rows = []
        for combo in range(2 ** len(parents)):
            performed_weight = 0.0
            for k, (tid, w) in enumerate(goal.tasks):
                bit = (combo >> (len(parents) - 1 - k)) & 1
                if bit == 0:  # state index 0 = performed
                    performed_weight += w
            p = _clip(performed_weight)
            rows.append([p, 1.0 - p])
        specs.append(
            NodeSpec(goal.id, ["pursued", "not-pursued"], parents, rows, role="goal")
        )
    specs.append(
        NodeSpec("reputation", ["high", "low"], [], [[0.5, 0.5]], role="reputation")
    )
    goal_ids = [g.id for g in spec.goals]
    cap_parents = goal_ids + ["reputation"]
    rows = []
    for combo in range(2 ** len(cap_parents)):
        bits = [(combo >> (len(cap_parents) - 1 - k)) & 1 for k in range(len(cap_parents))]
        pursued = sum(1 for b in bits[: len(goal_ids)] if b == 0)
        rep_high = bits[-1] == 0
        p = _clip(0.3 + 0.4 * (1.0 if rep_high else 0.0) + 0.25 * (pursued / max(1, len(goal_ids))))
        rows.append([p, 1.0 - p])
    specs.append(
        NodeSpec("capability", ["capable", "incapable"], cap_parents, rows, role="capability")
    )
    return build_network(specs)


def context_label(spec: ScenarioSpec, world: WorldState) -> str:
    """Coarse mission context: someone needs help, or routine operations."""
    for agent in world.agents:
        if agent.position is not None and world.grid.kind(agent.position) == "hazard":
            return spec.bbn.context_states[min(1, len(spec.bbn.context_states) - 1)]
    return spec.bbn.context_states[0]


def context_evidence(spec: ScenarioSpec, world: WorldState) -> dict[str, str]:
    return {"context": context_label(spec, world)}
