"""Network graph with stake-weighted analytics.

Mirrors the on-chain view of the relay network: staked nodes, priced edges,
and the partition/isolation/center queries the orchestration contract needs.
All values are integers; every tie breaks toward the smallest node id so
results replay bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _graphcore

NodeId = str


class TopologyError(ValueError):
    pass


def edge_key(a: NodeId, b: NodeId) -> tuple[NodeId, NodeId]:
    """Canonical unordered edge key."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class EdgeParams:
    """Per-edge terms: promised latency, base cost per message, cost per byte."""

    latency_promise_ms: int
    base_cost: int = 0
    byte_cost: int = 0

    def validate(self) -> None:
        if self.latency_promise_ms < 1:
            raise TopologyError("latency promise must be >= 1 ms")
        if self.base_cost < 0 or self.byte_cost < 0:
            raise TopologyError("edge costs must be >= 0")

    def message_fee(self, payload_len: int) -> int:
        return self.base_cost + self.byte_cost * payload_len


@dataclass
class Topology:
    """Staked nodes plus undirected priced edges."""

    nodes: dict[NodeId, int] = field(default_factory=dict)
    edges: dict[tuple[NodeId, NodeId], EdgeParams] = field(default_factory=dict)

    def add_node(self, node: NodeId, stake: int) -> None:
        if stake < 0:
            raise TopologyError(f"negative stake for {node}")
        if node in self.nodes:
            raise TopologyError(f"duplicate node {node}")
        self.nodes[node] = stake

    def add_edge(self, a: NodeId, b: NodeId, params: EdgeParams) -> None:
        if a == b:
            raise TopologyError(f"self-loop edge {a}")
        if a not in self.nodes or b not in self.nodes:
            raise TopologyError(f"edge {a}-{b} references unknown node")
        key = edge_key(a, b)
        if key in self.edges:
            raise TopologyError(f"duplicate edge {a}-{b}")
        params.validate()
        self.edges[key] = params

    def has_edge(self, a: NodeId, b: NodeId) -> bool:
        return edge_key(a, b) in self.edges

    def neighbors(self, node: NodeId) -> list[NodeId]:
        out = []
        for (a, b) in self.edges:
            if a == node:
                out.append(b)
            elif b == node:
                out.append(a)
        return sorted(out)

    def copy(self) -> "Topology":
        return Topology(dict(self.nodes), dict(self.edges))

    def _csr(self) -> tuple[list[NodeId], np.ndarray, np.ndarray]:
        order = sorted(self.nodes)
        index = {v: i for i, v in enumerate(order)}
        degree = np.zeros(len(order) + 1, dtype=np.int64)
        for a, b in self.edges:
            degree[index[a] + 1] += 1
            degree[index[b] + 1] += 1
        indptr = np.cumsum(degree)
        indices = np.zeros(int(indptr[-1]), dtype=np.int64)
        cursor = indptr[:-1].copy()
        for a, b in self.edges:
            ia, ib = index[a], index[b]
            indices[cursor[ia]] = ib
            cursor[ia] += 1
            indices[cursor[ib]] = ia
            cursor[ib] += 1
        return order, indptr, indices


def connected_components(topo: Topology) -> list[set[NodeId]]:
    """Maximal connected node sets, largest cumulative stake first.

    Ties between equal-stake components break toward the smallest contained
    node id.
    """
    if not topo.nodes:
        return []
    order, indptr, indices = topo._csr()
    labels = _graphcore.component_labels(len(order), indptr, indices)
    groups: dict[int, set[NodeId]] = {}
    for node, label in zip(order, labels):
        groups.setdefault(label, set()).add(node)
    comps = list(groups.values())
    comps.sort(key=lambda c: (-sum(topo.nodes[v] for v in c), min(c)))
    return comps


def majority_component(topo: Topology) -> set[NodeId]:
    """The component holding the largest cumulative stake."""
    comps = connected_components(topo)
    if not comps:
        raise TopologyError("empty topology has no majority component")
    return comps[0]


def is_isolated(topo: Topology, node: NodeId) -> bool:
    """True when the node sits outside the majority component."""
    if node not in topo.nodes:
        raise TopologyError(f"unknown node {node}")
    return node not in majority_component(topo)


def stake_weighted_center(topo: Topology) -> NodeId:
    """argmin over v of sum(hop_distance(u, v) * stake(u)).

    Candidates and the sum are both restricted to the majority component;
    ties break toward the smallest node id.
    """
    major = majority_component(topo)  # raises on empty topology
    order, indptr, indices = topo._csr()
    stakes = np.array([topo.nodes[v] for v in order], dtype=np.int64)
    allowed = np.array([v in major for v in order], dtype=np.uint8)
    best = _graphcore.weighted_center(len(order), indptr, indices, stakes, allowed)
    return order[best]


def attach_chain(
    topo: Topology,
    root: NodeId,
    chain_len: int,
    total_stake: int,
    prefix: str = "zz.chain.",
) -> tuple[Topology, list[NodeId]]:
    """Copy of the topology with a path of new nodes hung off ``root``.

    ``total_stake`` splits as evenly as possible, remainder piled on the
    farthest node. Used to probe whether an appended chain can capture the
    stake-weighted center.
    """
    if root not in topo.nodes:
        raise TopologyError(f"unknown root {root}")
    if chain_len < 1:
        raise TopologyError("chain length must be >= 1")
    out = topo.copy()
    base, rem = divmod(total_stake, chain_len)
    names = []
    prev = root
    for k in range(1, chain_len + 1):
        name = f"{prefix}{k:03d}"
        if name in out.nodes:
            raise TopologyError(f"chain node name collision: {name}")
        stake = base + (rem if k == chain_len else 0)
        out.add_node(name, stake)
        out.add_edge(prev, name, EdgeParams(latency_promise_ms=1))
        prev = name
        names.append(name)
    return out, names


def center_chain_resistance_oracle(
    topo: Topology,
    honest_root: NodeId,
    chain_len: int,
    attacker_stake_total: int,
) -> bool:
    """True iff an appended attacker chain fails to capture the center.

    Preconditions: the attacker controls strictly less stake than the
    existing (honest) topology and the chain has at least one node.
    """
    honest_total = sum(topo.nodes.values())
    if attacker_stake_total < 0:
        raise TopologyError("attacker stake must be >= 0")
    if attacker_stake_total >= honest_total:
        raise TopologyError("attacker stake must be below the honest total")
    augmented, chain = attach_chain(topo, honest_root, chain_len, attacker_stake_total)
    center = stake_weighted_center(augmented)
    return center not in set(chain)
