"""Discrete Bayesian belief network with exact inference and event-driven updates.

Each node holds an ordered list of states and a conditional probability table
(CPT) over its parents' joint states. Inference is exact: the full joint is
materialized as a numpy tensor (networks here stay small, ~20 nodes max) with
the current root beliefs standing in as priors. Event updates add a bounded
weight to the observed state and renormalize the rest proportionally, then
refresh descendant marginals through their CPTs.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

SUM_TOL = 1e-9  # every distribution must sum to 1 within this


class BeliefNetworkError(Exception):
    pass


class NetworkSpecError(BeliefNetworkError):
    """Cycle, dangling parent, or malformed CPT."""


class UnknownNodeError(BeliefNetworkError):
    pass


class UnknownStateError(BeliefNetworkError):
    pass


class ImpossibleEvidenceError(BeliefNetworkError):
    """Evidence combination has zero joint probability."""


@dataclass
class NodeSpec:
    """One discrete node: states, parents, and a CPT.

    CPT rows are row-major in parent-state lexicographic order (first parent
    varies slowest, last parent fastest); a root has exactly one row, its
    prior. The optional role tags how mission wiring uses the node
    (context/task/goal/capability/reputation).
    """

    id: str
    states: list[str]
    parents: list[str] = field(default_factory=list)
    cpt: list[list[float]] = field(default_factory=list)
    role: str | None = None


@dataclass
class WeightedEvent:
    """An observed occurrence of one node state with a context-judged weight."""

    node: str
    state: str
    weight: float
    context_tag: str = ""


class BeliefNetwork:
    """DAG of NodeSpecs plus a mutable marginal per node."""

    def __init__(self, nodes: dict[str, NodeSpec], order: list[str]):
        self.nodes = nodes
        self._order = order  # topological
        self._pos = {n: i for i, n in enumerate(order)}
        self._children: dict[str, list[str]] = {n: [] for n in order}
        for spec in nodes.values():
            for p in spec.parents:
                self._children[p].append(spec.id)
        self.beliefs: dict[str, list[float]] = {}
        self._root_version = 0
        self._joint_cache: tuple[int, np.ndarray] | None = None
        self._posterior_cache: dict[tuple, tuple[float, ...]] = {}

    # -- structure helpers -------------------------------------------------

    def is_root(self, node_id: str) -> bool:
        return not self.nodes[node_id].parents

    def topological_order(self) -> list[str]:
        return list(self._order)

    def descendants(self, node_id: str) -> set[str]:
        out: set[str] = set()
        stack = list(self._children[node_id])
        while stack:
            n = stack.pop()
            if n not in out:
                out.add(n)
                stack.extend(self._children[n])
        return out

    def ancestors(self, node_id: str) -> set[str]:
        out: set[str] = set()
        stack = list(self.nodes[node_id].parents)
        while stack:
            n = stack.pop()
            if n not in out:
                out.add(n)
                stack.extend(self.nodes[n].parents)
        return out

    def state_index(self, node_id: str, state: str) -> int:
        spec = self._spec(node_id)
        try:
            return spec.states.index(state)
        except ValueError:
            raise UnknownStateError(f"node {node_id!r} has no state {state!r}") from None

    def _spec(self, node_id: str) -> NodeSpec:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node_id!r}") from None

    def _cpt_table(self, spec: NodeSpec) -> np.ndarray:
        dims = [len(self.nodes[p].states) for p in spec.parents] + [len(spec.states)]
        return np.asarray(spec.cpt, dtype=float).reshape(dims)

    # -- mutation ----------------------------------------------------------

    def set_belief(self, node_id: str, distribution: Sequence[float]) -> None:
        """Directly overwrite one node's marginal (must sum to 1)."""
        spec = self._spec(node_id)
        dist = [float(x) for x in distribution]
        _check_distribution(dist, len(spec.states), f"belief for {node_id!r}")
        if dist == self.beliefs[node_id]:
            return
        self.beliefs[node_id] = dist
        self._touch(node_id)
        self._refresh_descendants(node_id)

    def _touch(self, node_id: str) -> None:
        if self.is_root(node_id):
            self._root_version += 1
            self._posterior_cache.clear()

    def _refresh_descendants(self, node_id: str) -> None:
        todo = self.descendants(node_id)
        for nid in self._order:
            if nid not in todo:
                continue
            spec = self.nodes[nid]
            weights = functools.reduce(
                np.multiply.outer,
                [np.asarray(self.beliefs[p]) for p in spec.parents],
            ).ravel()
            marginal = weights @ np.asarray(spec.cpt, dtype=float)
            self.beliefs[nid] = [float(x) for x in marginal]

    # -- joint tensor ------------------------------------------------------

    def _joint(self) -> np.ndarray:
        if self._joint_cache is not None and self._joint_cache[0] == self._root_version:
            return self._joint_cache[1]
        shape = [len(self.nodes[n].states) for n in self._order]
        joint = np.ones(shape)
        for nid in self._order:
            spec = self.nodes[nid]
            if spec.parents:
                table = self._cpt_table(spec)
                axes = [self._pos[p] for p in spec.parents] + [self._pos[nid]]
            else:
                table = np.asarray(self.beliefs[nid])
                axes = [self._pos[nid]]
            perm = np.argsort(axes)
            table = np.transpose(table, perm)
            expanded = [1] * len(shape)
            for ax in axes:
                expanded[ax] = shape[ax]
            joint = joint * table.reshape(expanded)
        self._joint_cache = (self._root_version, joint)
        return joint

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        nodes = []
        for nid in self._order:
            spec = self.nodes[nid]
            entry = {
                "id": spec.id,
                "states": list(spec.states),
                "parents": list(spec.parents),
                "cpt": [list(row) for row in spec.cpt],
            }
            if spec.role is not None:
                entry["role"] = spec.role
            nodes.append(entry)
        return {"nodes": nodes, "beliefs": {n: list(self.beliefs[n]) for n in self._order}}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "BeliefNetwork":
        specs = [
            NodeSpec(
                id=n["id"],
                states=list(n["states"]),
                parents=list(n.get("parents", [])),
                cpt=[list(row) for row in n["cpt"]],
                role=n.get("role"),
            )
            for n in doc["nodes"]
        ]
        net = build_network(specs)
        beliefs = doc.get("beliefs", {})
        for nid, dist in beliefs.items():
            spec = net._spec(nid)
            _check_distribution(list(dist), len(spec.states), f"belief for {nid!r}")
            net.beliefs[nid] = [float(x) for x in dist]
        net._root_version += 1
        net._posterior_cache.clear()
        return net


def _check_distribution(dist: list[float], width: int, what: str) -> None:
    if len(dist) != width:
        raise NetworkSpecError(f"{what}: expected {width} entries, got {len(dist)}")
    if any(x < 0.0 or x > 1.0 for x in dist):
        raise NetworkSpecError(f"{what}: probabilities must lie in [0, 1]")
    if abs(sum(dist) - 1.0) > SUM_TOL:
        raise NetworkSpecError(f"{what}: sums to {sum(dist)!r}, not 1")


def build_network(specs: Iterable[NodeSpec]) -> BeliefNetwork:
    """Validate the DAG and CPTs, then initialize every marginal exactly.

    Root beliefs start at the root's single CPT row; non-root beliefs are the
    exact marginals of the joint those priors and CPTs define.
    """
    spec_list = list(specs)
    nodes: dict[str, NodeSpec] = {}
    for spec in spec_list:
        if spec.id in nodes:
            raise NetworkSpecError(f"duplicate node id {spec.id!r}")
        if len(spec.states) < 2:
            raise NetworkSpecError(f"node {spec.id!r} needs at least 2 states")
        nodes[spec.id] = spec
    for spec in spec_list:
        for p in spec.parents:
            if p not in nodes:
                raise NetworkSpecError(f"node {spec.id!r} references unknown parent {p!r}")

    # Kahn's algorithm; anything left over sits on a cycle.
    indegree = {n: len(nodes[n].parents) for n in nodes}
    children: dict[str, list[str]] = {n: [] for n in nodes}
    for spec in spec_list:
        for p in spec.parents:
            children[p].append(spec.id)
    queue = [n for n in nodes if indegree[n] == 0]
    order: list[str] = []
    while queue:
        n = queue.pop(0)
        order.append(n)
        for c in children[n]:
            indegree[c] -= 1
            if indegree[c] == 0:
                queue.append(c)
    if len(order) != len(nodes):
        cyclic = sorted(set(nodes) - set(order))
        raise NetworkSpecError(f"cycle detected through {cyclic}")

    for spec in spec_list:
        expected_rows = 1
        for p in spec.parents:
            expected_rows *= len(nodes[p].states)
        if len(spec.cpt) != expected_rows:
            raise NetworkSpecError(
                f"node {spec.id!r}: CPT has {len(spec.cpt)} rows, expected {expected_rows}"
            )
        for i, row in enumerate(spec.cpt):
            _check_distribution(list(row), len(spec.states), f"node {spec.id!r} CPT row {i}")

    net = BeliefNetwork(nodes, order)
    for nid in order:
        if net.is_root(nid):
            net.beliefs[nid] = [float(x) for x in nodes[nid].cpt[0]]
        else:
            net.beliefs[nid] = [0.0] * len(nodes[nid].states)  # placeholder
    joint = net._joint()
    for nid in order:
        if net.is_root(nid):
            continue
        ax = tuple(i for i in range(joint.ndim) if i != net._pos[nid])
        net.beliefs[nid] = [float(x) for x in joint.sum(axis=ax)]
    return net


def protocol_update(net: BeliefNetwork, event: WeightedEvent) -> BeliefNetwork:
    """Apply an observed event: add its weight to the occurred state (clamped
    at 1), shrink the other states proportionally so the node still sums to 1,
    then refresh descendant marginals through their CPTs.

    A no-op update (weight 0, or the state already at 1) leaves the whole
    network untouched.
    """
    if not 0.0 <= event.weight <= 1.0:
        raise ValueError(f"event weight {event.weight!r} outside [0, 1]")
    spec = net._spec(event.node)
    si = net.state_index(event.node, event.state)
    belief = net.beliefs[event.node]
    occurred = min(1.0, belief[si] + event.weight)
    if occurred == belief[si]:
        return net
    scale = (1.0 - occurred) / (1.0 - belief[si])
    updated = [p * scale for p in belief]
    updated[si] = occurred
    net.beliefs[event.node] = updated
    net._touch(event.node)
    net._refresh_descendants(event.node)
    return net


def query_posterior(
    net: BeliefNetwork, query: str, evidence: Mapping[str, str] | None = None
) -> list[float]:
    """Exact posterior marginal of `query` given hard evidence.

    Full joint enumeration over the DAG with current root beliefs as priors.
    Raises ImpossibleEvidenceError when the evidence has zero probability.
    """
    evidence = dict(evidence or {})
    net._spec(query)
    ev_idx = {n: net.state_index(n, s) for n, s in sorted(evidence.items())}
    cache_key = (query, tuple(sorted(ev_idx.items())))
    cached = net._posterior_cache.get(cache_key)
    if cached is not None:
        return list(cached)

    arr = net._joint()
    remaining = list(net._order)
    for node, idx in sorted(ev_idx.items()):
        if node == query:
            continue
        arr = np.take(arr, idx, axis=remaining.index(node))
        remaining.remove(node)
    qax = remaining.index(query)
    other = tuple(i for i in range(arr.ndim) if i != qax)
    vec = arr.sum(axis=other) if other else arr

    width = len(net.nodes[query].states)
    if query in ev_idx:
        mass = float(vec[ev_idx[query]])
        if mass <= 0.0:
            raise ImpossibleEvidenceError(f"evidence {evidence} has zero probability")
        out = [0.0] * width
        out[ev_idx[query]] = 1.0
    else:
        total = float(vec.sum())
        if total <= 0.0:
            raise ImpossibleEvidenceError(f"evidence {evidence} has zero probability")
        out = [float(x) / total for x in vec]
    net._posterior_cache[cache_key] = tuple(out)
    return out


def predict_from_history(
    net: BeliefNetwork, query: str, evidence: Mapping[str, str] | None = None
) -> list[float]:
    """Predicted capability distribution given the track record so far.

    Conditions the capability-role query node on the dominant state of the
    reputation-role node found among its ancestors, merged with any extra
    evidence supplied (explicit evidence wins on conflict).
    """
    spec = net._spec(query)
    if spec.role != "capability":
        raise NetworkSpecError(f"node {query!r} is not a capability-role node")
    reputation = None
    for nid in net._order:
        if nid in net.ancestors(query) and net.nodes[nid].role == "reputation":
            reputation = nid
            break
    if reputation is None:
        raise NetworkSpecError(f"node {query!r} has no reputation-role ancestor")
    belief = net.beliefs[reputation]
    dominant = net.nodes[reputation].states[int(np.argmax(belief))]
    merged = {reputation: dominant}
    merged.update(evidence or {})
    return query_posterior(net, query, merged)
