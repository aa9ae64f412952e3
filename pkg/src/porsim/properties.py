"""Randomized invariant suites and their scenario generator.

Three families of checks, all seeded and replay-deterministic:

* outcome trichotomy: in random adversarial networks, every acknowledged
  message whose first hop is honest classifies as response, severance proof,
  or fully-paid lateness; never as an originator-channel default;
* relay induction: honest, online, solvent relays never default upstream;
  money conservation is asserted inside the engine on every event;
* center chain resistance: hanging a chain of attacker nodes off a random
  honest graph never captures the stake-weighted center while the attacker
  holds less stake than the honest total; verified against a brute-force
  all-pairs argmin oracle independent of the BFS kernels.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .node import HONEST_POLICIES, RelayPolicy
from .scenario import EdgeSpec, NodeSpec, Scenario, ScriptEvent, scenario_to_text
from .sim import OUTCOME_DEFAULT, assert_trichotomy, run
from .topology import (
    Topology,
    attach_chain,
    stake_weighted_center,
)


@dataclass
class SweepReport:
    name: str
    cases: int = 0
    failures: list[str] = field(default_factory=list)
    counterexample: str | None = None

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        detail = "" if self.ok else f" ({len(self.failures)} failures)"
        return f"{status} {self.name}: {self.cases} cases{detail}"

    def counterexample_text(self) -> str:
        lines = [f"first failure: {self.failures[0]}"] if self.failures else []
        if self.counterexample:
            lines.append("counterexample scenario:")
            lines.append(self.counterexample)
        return "\n".join(lines)


# -- scenario generation ----------------------------------------------------------


def _bfs_path(adj: dict[str, list[str]], src: str, dst: str) -> list[str] | None:
    prev: dict[str, str] = {src: src}
    queue = [src]
    while queue:
        v = queue.pop(0)
        if v == dst:
            break
        for u in adj[v]:
            if u not in prev:
                prev[u] = v
                queue.append(u)
    if dst not in prev:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def random_scenario(rng: random.Random, honest_first_hop: bool = True) -> Scenario:
    """A small random network with adversarial relays and 1-3 messages."""
    n = rng.randint(3, 10)
    names = [f"n{i}" for i in range(n)]
    edges: set[tuple[str, str]] = set()
    for i in range(1, n):
        j = rng.randrange(i)
        edges.add(tuple(sorted((names[i], names[j]))))
    for _ in range(rng.randint(0, n)):
        a, b = rng.sample(names, 2)
        edges.add(tuple(sorted((a, b))))
    adj: dict[str, list[str]] = {v: [] for v in names}
    for a, b in sorted(edges):
        adj[a].append(b)
        adj[b].append(a)
    for v in adj:
        adj[v].sort()

    edge_specs = []
    max_interval = 0
    for a, b in sorted(edges):
        promise = rng.choice((50, 100, 100, 200))
        actual = rng.choice((promise, promise, promise, max(1, promise // 2), promise * 2))
        interval = rng.choice((300, 500, 1000))
        max_interval = max(max_interval, interval)
        edge_specs.append(
            EdgeSpec(
                a=a,
                b=b,
                latency_promise_ms=promise,
                base_cost=rng.randint(0, 3),
                byte_cost=rng.randint(0, 1),
                late_rate=rng.choice((1, 1, 2)),
                sync_interval_ms=interval,
                sync_phase_ms=rng.randrange(0, interval),
                actual_latency_ms=actual,
            )
        )

    n_msgs = rng.randint(1, 3)
    script = []
    protected: set[str] = set()
    max_budget = 0
    for _ in range(n_msgs):
        author, dest = rng.sample(names, 2)
        path = _bfs_path(adj, author, dest)
        if path is None or len(path) < 2:
            continue
        protected.add(author)
        if honest_first_hop:
            protected.add(path[1])
        start = rng.randrange(0, 500)
        promises = {tuple(sorted((e.a, e.b))): e.latency_promise_ms for e in edge_specs}
        budget = 2 * sum(
            promises[tuple(sorted(pair))] for pair in zip(path, path[1:])
        )
        max_budget = max(max_budget, start + budget)
        script.append(
            ScriptEvent(
                start,
                "originate",
                author=author,
                target=dest,
                payload_len=rng.randint(0, 16),
                paths=(tuple(path),),
            )
        )

    node_specs = []
    policies: dict[str, RelayPolicy] = {}
    for v in names:
        offline_from = None
        responds = True
        respond_delay = 0
        if v in protected:
            kind = rng.choice(("adaptive", "wait_sync", "break_immediately", "wait_for"))
        else:
            kind = rng.choice(
                HONEST_POLICIES + ("deadbeat", "sever_withhold_default", "deadbeat")
            )
            if rng.random() < 0.25:
                offline_from = rng.randrange(0, 1500)
            if rng.random() < 0.25:
                responds = False
            elif rng.random() < 0.3:
                respond_delay = rng.randrange(0, 800)
        if kind == "wait_for":
            policies[v] = RelayPolicy(kind="wait_for", wait_ms=rng.randrange(0, 2000))
        elif kind == "adaptive":
            policies[v] = RelayPolicy(kind="adaptive", window_ms=3_600_000, threshold=0)
        else:
            policies[v] = RelayPolicy(kind=kind)
        node_specs.append(
            NodeSpec(
                name=v,
                stake=rng.randint(1, 50),
                cash=1_000_000,
                offline_from=offline_from,
                responds=responds,
                respond_delay_ms=respond_delay,
            )
        )

    scenario = Scenario(
        name=f"sweep-{rng.randrange(10**9)}",
        nodes=node_specs,
        edges=edge_specs,
        policies=policies,
        script=sorted(script, key=lambda ev: ev.time),
        horizon_ms=max_budget + 4 * max_interval + 4000,
        actors=[],
    )
    scenario.ledger.severance_penalty = rng.choice((0, 2, 10))
    scenario.ledger.chain_finality_delay_ms = rng.choice((0, 100, 400))
    scenario.validate()
    return scenario


def _honest_nodes(scenario: Scenario) -> set[str]:
    honest = set()
    for spec in scenario.nodes:
        policy = scenario.policies.get(spec.name, RelayPolicy())
        if policy.kind in HONEST_POLICIES and spec.offline_from is None:
            honest.add(spec.name)
    return honest


# -- suites -------------------------------------------------------------------------


def run_trichotomy_sweep(seed: int, iterations: int) -> SweepReport:
    """Criterion sweep: trichotomy for honest originators plus relay induction."""
    report = SweepReport(name="outcome-trichotomy")
    for i in range(iterations):
        rng = random.Random(seed * 1_000_003 + i)
        scenario = random_scenario(rng)
        result = run(scenario)  # money conservation asserted per event inside
        honest = _honest_nodes(scenario)
        report.cases += 1
        for msg_id, meta in result.messages.items():
            first_hop = meta.msg.path[1]
            verdict = assert_trichotomy(result, msg_id)
            if meta.acked_at is not None and first_hop in honest:
                if verdict == OUTCOME_DEFAULT:
                    report.failures.append(
                        f"iteration {i}: {msg_id} got default verdict with honest first hop"
                    )
                    report.counterexample = scenario_to_text(scenario)
        for msg_id, ower in result.defaulted_obligations:
            if ower in honest:
                report.failures.append(
                    f"iteration {i}: honest relay {ower} defaulted on {msg_id}"
                )
                report.counterexample = scenario_to_text(scenario)
    return report


def brute_force_center(topo: Topology) -> str:
    """Independent oracle: Floyd-Warshall distances + naive argmin.

    Shares no code with the BFS kernels; used to cross-check
    stake_weighted_center in the resistance sweep and unit tests.
    """
    nodes = sorted(topo.nodes)
    inf = float("inf")
    dist = {a: {b: (0 if a == b else inf) for b in nodes} for a in nodes}
    for (a, b) in topo.edges:
        dist[a][b] = 1
        dist[b][a] = 1
    for k in nodes:
        dk = dist[k]
        for i in nodes:
            dik = dist[i][k]
            if dik is inf:
                continue
            di = dist[i]
            for j in nodes:
                alt = dik + dk[j]
                if alt < di[j]:
                    di[j] = alt
    # majority component: group by reachability
    comps: list[list[str]] = []
    seen: set[str] = set()
    for v in nodes:
        if v in seen:
            continue
        comp = [u for u in nodes if dist[v][u] < inf]
        seen.update(comp)
        comps.append(comp)
    comps.sort(key=lambda c: (-sum(topo.nodes[v] for v in c), min(c)))
    major = comps[0]
    best = None
    best_cost = None
    for v in major:
        cost = sum(dist[u][v] * topo.nodes[u] for u in major if u != v)
        if best_cost is None or cost < best_cost or (cost == best_cost and v < best):
            best, best_cost = v, cost
    return best


def random_connected_topology(rng: random.Random, max_nodes: int = 12) -> Topology:
    from .topology import EdgeParams

    n = rng.randint(2, max_nodes)
    topo = Topology()
    names = [f"h{i:02d}" for i in range(n)]
    for v in names:
        topo.add_node(v, rng.randint(1, 100))
    for i in range(1, n):
        topo.add_edge(names[i], names[rng.randrange(i)], EdgeParams(1))
    for _ in range(rng.randint(0, n)):
        a, b = rng.sample(names, 2)
        if not topo.has_edge(a, b):
            topo.add_edge(a, b, EdgeParams(1))
    return topo


def run_center_resistance_sweep(
    seed: int,
    graphs: int,
    chain_lengths: range = range(1, 7),
    stake_points: int = 10,
) -> SweepReport:
    """Attacker chains never capture the center; kernel agrees with brute force."""
    report = SweepReport(name="center-chain-resistance")
    for g in range(graphs):
        rng = random.Random(seed * 7_919 + g)
        topo = random_connected_topology(rng)
        honest_total = sum(topo.nodes.values())
        root = rng.choice(sorted(topo.nodes))
        for chain_len in chain_lengths:
            for p in range(stake_points):
                attacker_total = (p * (honest_total - 1)) // max(1, stake_points - 1)
                augmented, chain = attach_chain(topo, root, chain_len, attacker_total)
                fast = stake_weighted_center(augmented)
                brute = brute_force_center(augmented)
                report.cases += 1
                if fast != brute:
                    report.failures.append(
                        f"graph {g} chain {chain_len} stake {attacker_total}: "
                        f"kernel={fast} oracle={brute}"
                    )
                elif fast in set(chain):
                    report.failures.append(
                        f"graph {g} chain {chain_len} stake {attacker_total}: "
                        f"center captured at {fast}"
                    )
    return report
