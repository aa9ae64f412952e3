"""Scenario files: the line-oriented text format driving simulation runs.

A scenario declares nodes (stake, cash, faults), edges (latency promise and
actual, pricing, late rate, sync schedule, capacity), ledger parameters,
per-node policies, a timed script, and run settings. ``parse_scenario`` /
``scenario_to_text`` round-trip: parse(serialize(parse(text))) == parse(text).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .ledger import LedgerParams
from .node import RelayPolicy, parse_policy, policy_to_tokens
from .topology import EdgeParams, NodeId


class ScenarioError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class NodeSpec:
    name: NodeId
    stake: int = 10
    cash: int = 1_000_000
    offline_from: int | None = None
    offline_until: int | None = None  # None = forever, when offline_from set
    responds: bool = True
    respond_delay_ms: int = 0


@dataclass(frozen=True)
class EdgeSpec:
    a: NodeId
    b: NodeId
    latency_promise_ms: int
    base_cost: int = 0
    byte_cost: int = 0
    late_rate: int = 1
    sync_interval_ms: int = 1000
    sync_phase_ms: int = 0
    actual_latency_ms: int | None = None  # defaults to the promise
    capacity: int | None = None

    @property
    def params(self) -> EdgeParams:
        return EdgeParams(self.latency_promise_ms, self.base_cost, self.byte_cost)

    @property
    def actual(self) -> int:
        return (
            self.actual_latency_ms
            if self.actual_latency_ms is not None
            else self.latency_promise_ms
        )


@dataclass(frozen=True)
class ScriptEvent:
    time: int
    kind: str  # originate | pursue | offline | online | adjudicate
    author: NodeId | None = None
    target: NodeId | None = None
    payload_len: int = 0
    paths: tuple[tuple[NodeId, ...], ...] = ()


@dataclass
class Scenario:
    name: str = "scenario"
    nodes: list[NodeSpec] = field(default_factory=list)
    edges: list[EdgeSpec] = field(default_factory=list)
    ledger: LedgerParams = field(default_factory=LedgerParams)
    policies: dict[NodeId, RelayPolicy] = field(default_factory=dict)
    script: list[ScriptEvent] = field(default_factory=list)
    horizon_ms: int = 10_000
    actors: list[NodeId] = field(default_factory=list)

    def validate(self) -> None:
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise ScenarioError("duplicate node declaration")
        known = set(names)
        for e in self.edges:
            for v in (e.a, e.b):
                if v not in known:
                    raise ScenarioError(f"edge references undeclared node {v}")
            if e.a == e.b:
                raise ScenarioError(f"self-loop edge {e.a}")
        for v in self.policies:
            if v not in known:
                raise ScenarioError(f"policy for undeclared node {v}")
        for v in self.actors:
            if v not in known:
                raise ScenarioError(f"actor {v} not declared")
        for ev in self.script:
            for v in (ev.author, ev.target):
                if v is not None and v not in known:
                    raise ScenarioError(f"script references undeclared node {v}")
            for path in ev.paths:
                for v in path:
                    if v not in known:
                        raise ScenarioError(f"path references undeclared node {v}")
            if ev.time < 0:
                raise ScenarioError("script times must be >= 0")
        if self.horizon_ms < 0:
            raise ScenarioError("horizon_ms must be >= 0")


# -- parsing --------------------------------------------------------------------

_SECTIONS = ("nodes", "edges", "ledger", "policies", "script", "run")


def _parse_kv(token: str, line_no: int) -> tuple[str, str]:
    key, sep, value = token.partition("=")
    if not sep:
        raise ScenarioError(f"expected key=value, got {token!r}", line_no)
    return key, value


def _parse_path(text: str, line_no: int) -> tuple[NodeId, ...]:
    nodes = tuple(p for p in text.split(">") if p)
    if len(nodes) < 2:
        raise ScenarioError(f"path needs at least two nodes: {text!r}", line_no)
    return nodes


def parse_scenario(text: str) -> Scenario:
    scenario = Scenario()
    section = None
    seen_ledger_keys = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ScenarioError(f"unknown section [{section}]", line_no)
            continue
        if section is None:
            raise ScenarioError("content before any [section]", line_no)
        tokens = line.split()
        try:
            if section == "nodes":
                scenario.nodes.append(_parse_node(tokens, line_no))
            elif section == "edges":
                scenario.edges.append(_parse_edge(tokens, line_no))
            elif section == "ledger":
                _parse_ledger_line(scenario.ledger, tokens, line_no, seen_ledger_keys)
            elif section == "policies":
                name = tokens[0]
                if name in scenario.policies:
                    raise ScenarioError(f"duplicate policy for {name}", line_no)
                scenario.policies[name] = parse_policy(tokens[1:])
            elif section == "script":
                scenario.script.append(_parse_script(tokens, line_no))
            elif section == "run":
                _parse_run_line(scenario, tokens, line_no)
        except ScenarioError:
            raise
        except (ValueError, IndexError) as exc:
            raise ScenarioError(str(exc), line_no) from exc
    scenario.script.sort(key=lambda ev: ev.time)
    scenario.validate()
    return scenario


def _parse_node(tokens: list[str], line_no: int) -> NodeSpec:
    name = tokens[0]
    kwargs: dict = {"name": name}
    for token in tokens[1:]:
        key, value = _parse_kv(token, line_no)
        if key == "stake":
            kwargs["stake"] = int(value)
        elif key == "cash":
            kwargs["cash"] = int(value)
        elif key == "offline":
            start, _, end = value.partition("..")
            kwargs["offline_from"] = int(start)
            kwargs["offline_until"] = int(end) if end else None
        elif key == "responds":
            if value != "never":
                raise ScenarioError(f"responds only supports 'never', got {value!r}", line_no)
            kwargs["responds"] = False
        elif key == "respond_delay":
            kwargs["respond_delay_ms"] = int(value)
        else:
            raise ScenarioError(f"unknown node option {key!r}", line_no)
    return NodeSpec(**kwargs)


def _parse_edge(tokens: list[str], line_no: int) -> EdgeSpec:
    if len(tokens) < 3:
        raise ScenarioError("edge needs two endpoints and options", line_no)
    kwargs: dict = {"a": tokens[0], "b": tokens[1]}
    mapping = {
        "latency": "latency_promise_ms",
        "base": "base_cost",
        "byte": "byte_cost",
        "rate": "late_rate",
        "sync": "sync_interval_ms",
        "phase": "sync_phase_ms",
        "actual": "actual_latency_ms",
        "capacity": "capacity",
    }
    for token in tokens[2:]:
        key, value = _parse_kv(token, line_no)
        if key not in mapping:
            raise ScenarioError(f"unknown edge option {key!r}", line_no)
        kwargs[mapping[key]] = int(value)
    if "latency_promise_ms" not in kwargs:
        raise ScenarioError("edge needs latency=<ms>", line_no)
    return EdgeSpec(**kwargs)


def _parse_ledger_line(
    params: LedgerParams, tokens: list[str], line_no: int, seen: set
) -> None:
    if len(tokens) != 2:
        raise ScenarioError("ledger lines are '<key> <value>'", line_no)
    key, value = tokens
    if key in seen:
        raise ScenarioError(f"duplicate ledger key {key}", line_no)
    seen.add(key)
    if key == "severance_penalty":
        params.severance_penalty = int(value)
    elif key == "partition_slash_fraction":
        params.partition_slash_fraction = Fraction(value)
    elif key == "chain_finality_delay_ms":
        params.chain_finality_delay_ms = int(value)
    else:
        raise ScenarioError(f"unknown ledger key {key!r}", line_no)


def _parse_script(tokens: list[str], line_no: int) -> ScriptEvent:
    time = int(tokens[0])
    kind = tokens[1]
    if kind == "originate":
        author, dest = tokens[2], tokens[3]
        payload_len = 0
        paths: tuple = ()
        for token in tokens[4:]:
            key, value = _parse_kv(token, line_no)
            if key == "payload":
                payload_len = int(value)
            elif key == "path":
                paths = (_parse_path(value, line_no),)
            else:
                raise ScenarioError(f"unknown originate option {key!r}", line_no)
        if not paths:
            raise ScenarioError("originate needs path=a>b>...", line_no)
        return ScriptEvent(time, "originate", author=author, target=dest,
                           payload_len=payload_len, paths=paths)
    if kind == "pursue":
        author, target = tokens[2], tokens[3]
        payload_len = 0
        paths: tuple = ()
        for token in tokens[4:]:
            key, value = _parse_kv(token, line_no)
            if key == "payload":
                payload_len = int(value)
            elif key == "paths":
                paths = tuple(_parse_path(p, line_no) for p in value.split(";") if p)
            else:
                raise ScenarioError(f"unknown pursue option {key!r}", line_no)
        return ScriptEvent(time, "pursue", author=author, target=target,
                           payload_len=payload_len, paths=paths)
    if kind in ("offline", "online"):
        return ScriptEvent(time, kind, author=tokens[2])
    if kind == "adjudicate":
        return ScriptEvent(time, "adjudicate")
    raise ScenarioError(f"unknown script command {kind!r}", line_no)


def _parse_run_line(scenario: Scenario, tokens: list[str], line_no: int) -> None:
    if len(tokens) != 1:
        raise ScenarioError("run lines are single key=value tokens", line_no)
    key, value = _parse_kv(tokens[0], line_no)
    if key == "horizon_ms":
        scenario.horizon_ms = int(value)
    elif key == "actors":
        scenario.actors = [v for v in value.split(",") if v]
    elif key == "name":
        scenario.name = value
    else:
        raise ScenarioError(f"unknown run key {key!r}", line_no)


# -- serialization ---------------------------------------------------------------


def scenario_to_text(scenario: Scenario) -> str:
    out = []
    out.append("[nodes]")
    for n in scenario.nodes:
        parts = [n.name, f"stake={n.stake}", f"cash={n.cash}"]
        if n.offline_from is not None:
            until = "" if n.offline_until is None else str(n.offline_until)
            parts.append(f"offline={n.offline_from}..{until}")
        if not n.responds:
            parts.append("responds=never")
        if n.respond_delay_ms:
            parts.append(f"respond_delay={n.respond_delay_ms}")
        out.append(" ".join(parts))
    out.append("")
    out.append("[edges]")
    for e in scenario.edges:
        parts = [
            e.a,
            e.b,
            f"latency={e.latency_promise_ms}",
            f"base={e.base_cost}",
            f"byte={e.byte_cost}",
            f"rate={e.late_rate}",
            f"sync={e.sync_interval_ms}",
            f"phase={e.sync_phase_ms}",
        ]
        if e.actual_latency_ms is not None:
            parts.append(f"actual={e.actual_latency_ms}")
        if e.capacity is not None:
            parts.append(f"capacity={e.capacity}")
        out.append(" ".join(parts))
    out.append("")
    out.append("[ledger]")
    out.append(f"severance_penalty {scenario.ledger.severance_penalty}")
    out.append(f"partition_slash_fraction {scenario.ledger.partition_slash_fraction}")
    out.append(f"chain_finality_delay_ms {scenario.ledger.chain_finality_delay_ms}")
    out.append("")
    if scenario.policies:
        out.append("[policies]")
        for name in scenario.policies:
            out.append(" ".join([name] + policy_to_tokens(scenario.policies[name])))
        out.append("")
    if scenario.script:
        out.append("[script]")
        for ev in scenario.script:
            out.append(_script_to_text(ev))
        out.append("")
    out.append("[run]")
    out.append(f"horizon_ms={scenario.horizon_ms}")
    if scenario.actors:
        out.append("actors=" + ",".join(scenario.actors))
    out.append(f"name={scenario.name}")
    return "\n".join(out) + "\n"


def _script_to_text(ev: ScriptEvent) -> str:
    if ev.kind == "originate":
        path = ">".join(ev.paths[0])
        return f"{ev.time} originate {ev.author} {ev.target} payload={ev.payload_len} path={path}"
    if ev.kind == "pursue":
        paths = ";".join(">".join(p) for p in ev.paths)
        suffix = f" payload={ev.payload_len}" if ev.payload_len else ""
        return f"{ev.time} pursue {ev.author} {ev.target}{suffix} paths={paths}"
    if ev.kind in ("offline", "online"):
        return f"{ev.time} {ev.kind} {ev.author}"
    return f"{ev.time} adjudicate"
