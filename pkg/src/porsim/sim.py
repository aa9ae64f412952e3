"""Deterministic discrete-event engine.

Virtual clock in integer milliseconds, a single totally-ordered event queue,
scripted fault injection, and full trace capture. Replaying a scenario yields
a bit-identical trace: events order by (time, kind priority, insertion seq)
and every container iterates in a fixed order.

Money conservation is asserted after every event: stake accounts + penalty
pot + node cash + in-transit message attachments add up to the initial total.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from . import node as node_mod
from .channel import RESPONSE, SEVERANCE_PROOF, ChannelState, Ms, Money, MsgId
from .ledger import LedgerState, SeveranceProof
from .node import (
    Enqueue,
    KeepFee,
    Message,
    NodeState,
    PendOutcome,
    PursueNext,
    RecordLoss,
    RelayPolicy,
    ReportIsolation,
    SendForward,
    SendProof,
    SendResponse,
    Sever,
    Wake,
    build_message,
)
from .scenario import Scenario
from .topology import NodeId, connected_components, edge_key, is_isolated

# outcome classifications
OUTCOME_RESPONSE = "response"
OUTCOME_SEVERANCE_PROOF = "severance-proof"
OUTCOME_PAID_LATENESS = "fully-paid-lateness"
OUTCOME_DEFAULT = "ORIGINATOR-CHANNEL-DEFAULT"


class SimError(ValueError):
    pass


class SimInvariantError(AssertionError):
    pass


_PRIORITY = {
    "script": 0,
    "deliver": 1,
    "chain_finalize": 2,
    "wake": 3,
    "sync": 4,
}


@dataclass(frozen=True)
class Event:
    time: Ms
    prio: int
    seq: int
    kind: str
    data: tuple

    def sort_key(self):
        return (self.time, self.prio, self.seq)


@dataclass(frozen=True)
class TraceRecord:
    time: Ms
    actors: tuple[NodeId, ...]
    action: str
    amount: Money | None = None


def trace_to_text(trace: list[TraceRecord]) -> str:
    lines = []
    for rec in trace:
        amount = "" if rec.amount is None else str(rec.amount)
        lines.append(f"{rec.time}\t{','.join(rec.actors)}\t{rec.action}\t{amount}")
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass
class MessageMeta:
    msg: Message
    originated_at: Ms
    acked_at: Ms | None = None


@dataclass
class RunResult:
    scenario: Scenario
    trace: list[TraceRecord]
    ledger: LedgerState
    nodes: dict[NodeId, NodeState]
    channels: dict[tuple[NodeId, NodeId], ChannelState]
    messages: dict[MsgId, MessageMeta]
    defaulted_obligations: set[tuple[MsgId, NodeId]]
    in_transit: Money = 0

    def trace_text(self) -> str:
        return trace_to_text(self.trace)

    def total_money(self) -> Money:
        """Stakes + penalty pot + node cash + in-flight message attachments."""
        return (
            self.ledger.conservation_total()
            + sum(node.cash for node in self.nodes.values())
            + self.in_transit
        )


def msg_tag(msg_id: MsgId) -> str:
    return f"{msg_id[0]}#{msg_id[1]}"


def edge_tag(key: tuple[NodeId, NodeId]) -> str:
    return f"{key[0]}-{key[1]}"


class Engine:
    """One scenario execution. Also serves as the env object node reducers see."""

    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.scenario = scenario
        self.horizon = scenario.horizon_ms
        self.now: Ms = 0
        self._seq = 0
        self._heap: list[tuple] = []
        self.trace: list[TraceRecord] = []

        self.ledger = LedgerState(ledger_id=scenario.name, params=scenario.ledger)
        self.nodes: dict[NodeId, NodeState] = {}
        for spec in scenario.nodes:
            self.ledger.register_node(spec.name, spec.stake, now=0)
            self.nodes[spec.name] = NodeState(
                name=spec.name,
                policy=scenario.policies.get(spec.name, RelayPolicy()),
                cash=spec.cash,
                responds=spec.responds,
                respond_delay_ms=spec.respond_delay_ms,
            )
        self.channels: dict[tuple[NodeId, NodeId], ChannelState] = {}
        self.edge_actual: dict[tuple[NodeId, NodeId], Ms] = {}
        self.edge_cap: dict[tuple[NodeId, NodeId], int | None] = {}
        for espec in scenario.edges:
            key = edge_key(espec.a, espec.b)
            self.ledger.open_edge(espec.a, espec.b, espec.params, now=0)
            self.channels[key] = ChannelState(
                endpoints=key,
                late_rate=espec.late_rate,
                sync_interval_ms=espec.sync_interval_ms,
                sync_phase_ms=espec.sync_phase_ms,
            )
            self.edge_actual[key] = espec.actual
            self.edge_cap[key] = espec.capacity

        self.in_transit: Money = 0
        self.initial_total = self.ledger.conservation_total() + sum(
            n.cash for n in self.nodes.values()
        )
        self.in_flight_count: dict[tuple[NodeId, NodeId], int] = {}
        self.slots: dict[tuple[MsgId, NodeId], tuple[NodeId, NodeId]] = {}
        self.pend: dict[
            tuple[tuple[NodeId, NodeId], NodeId], list[tuple[MsgId, NodeId, str, object]]
        ] = {}
        self.messages: dict[MsgId, MessageMeta] = {}
        self._msg_seq: dict[NodeId, int] = {}
        self.defaulted_obligations: set[tuple[MsgId, NodeId]] = set()
        self.chan_gen: dict[tuple[NodeId, NodeId], int] = {k: 0 for k in self.channels}
        self.initial_edges = set(self.ledger.edges)

        for spec in scenario.nodes:
            if spec.offline_from is not None:
                self._schedule(spec.offline_from, "script", ("offline", spec.name))
                if spec.offline_until is not None:
                    self._schedule(spec.offline_until, "script", ("online", spec.name))
        for ev in scenario.script:
            self._schedule(ev.time, "script", ("event", ev))
        for key in sorted(self.channels):
            self._schedule_sync(key, self.channels[key].next_sync_time)

    # -- scheduling -----------------------------------------------------------

    def _schedule(self, time: Ms, kind: str, data: tuple) -> None:
        if time < self.now:
            raise SimInvariantError(f"event scheduled in the past: {kind} at {time}")
        if time >= self.horizon:
            return
        self._seq += 1
        heapq.heappush(self._heap, (time, _PRIORITY[kind], self._seq, kind, data))

    def _schedule_sync(self, key: tuple[NodeId, NodeId], time: Ms) -> None:
        self._schedule(time, "sync", (key, self.chan_gen[key]))

    def _emit(self, actors: tuple[NodeId, ...], action: str, amount: Money | None = None):
        self.trace.append(TraceRecord(self.now, actors, action, amount))

    # -- env interface used by node reducers -----------------------------------

    def edge_params(self, a: NodeId, b: NodeId):
        key = edge_key(a, b)
        if key in self.ledger.pending_severance:
            return None
        return self.ledger.edges.get(key)

    def proof_for_edge(self, a: NodeId, b: NodeId) -> SeveranceProof | None:
        key = edge_key(a, b)
        for index in range(len(self.ledger.severance_log) - 1, -1, -1):
            if self.ledger.severance_log[index].edge == key:
                return SeveranceProof(
                    ledger_id=self.ledger.ledger_id,
                    log_index=index,
                    edge=key,
                    token=SeveranceProof.make_token(self.ledger.ledger_id, index, key),
                )
        return None

    def edge_capacity(self, a: NodeId, b: NodeId) -> int | None:
        return self.edge_cap.get(edge_key(a, b))

    def in_flight(self, a: NodeId, b: NodeId) -> int:
        return self.in_flight_count.get(edge_key(a, b), 0)

    def next_sync_after(self, a: NodeId, b: NodeId, t: Ms) -> Ms:
        return self.channels[edge_key(a, b)].next_sync_after(t)

    def isolation_status(self, target: NodeId) -> tuple[bool, Ms]:
        topo = self.ledger.topology(drop_pending=True)
        isolated = target in topo.nodes and is_isolated(topo, target)
        ready = self.now
        for index in self.ledger.pending_severance.values():
            ready = max(ready, self.ledger.severance_log[index].finalize_time)
        return isolated, ready

    # -- run loop ---------------------------------------------------------------

    def run(self) -> RunResult:
        while self._heap:
            time, prio, seq, kind, data = heapq.heappop(self._heap)
            self.now = time
            if kind == "script":
                self._handle_script(data)
            elif kind == "deliver":
                self._handle_deliver(*data)
            elif kind == "chain_finalize":
                self._handle_finalize(*data)
            elif kind == "wake":
                self._handle_wake(*data)
            elif kind == "sync":
                self._handle_sync(*data)
            self._check_conservation()
        return RunResult(
            scenario=self.scenario,
            trace=self.trace,
            ledger=self.ledger,
            nodes=self.nodes,
            channels=self.channels,
            messages=self.messages,
            defaulted_obligations=self.defaulted_obligations,
            in_transit=self.in_transit,
        )

    def _check_conservation(self) -> None:
        total = (
            self.ledger.conservation_total()
            + sum(n.cash for n in self.nodes.values())
            + self.in_transit
        )
        if total != self.initial_total:
            raise SimInvariantError(
                f"money not conserved at t={self.now}: {total} != {self.initial_total}"
            )

    # -- script ------------------------------------------------------------------

    def _handle_script(self, data: tuple) -> None:
        tag = data[0]
        if tag == "offline":
            name = data[1]
            self.nodes[name].online = False
            self._emit((name,), "offline")
            return
        if tag == "online":
            name = data[1]
            self.nodes[name].online = True
            self.ledger.note_rejoin(name, self.now)
            self._emit((name,), "online")
            return
        ev = data[1]
        if ev.kind == "originate":
            self._originate(ev.author, ev.target, ev.payload_len, ev.paths[0])
        elif ev.kind == "pursue":
            node = self.nodes[ev.author]
            self._emit(
                (ev.author,),
                f"pursue target={ev.target} paths={len(ev.paths)}",
            )
            node.pursuit_payload = ev.payload_len
            actions = node.start_pursuit(ev.target, ev.paths, self.now)
            if node.pursuit is not None and node.pursuit.done == "exhausted":
                self._emit((ev.author,), f"pursue_done target={ev.target} status=exhausted")
            self._apply(node, actions)
        elif ev.kind == "offline":
            self.nodes[ev.author].online = False
            self._emit((ev.author,), "offline")
        elif ev.kind == "online":
            self.nodes[ev.author].online = True
            self.ledger.note_rejoin(ev.author, self.now)
            self._emit((ev.author,), "online")
        elif ev.kind == "adjudicate":
            self._adjudicate()

    def _adjudicate(self) -> None:
        topo = self.ledger.topology()
        if len(connected_components(topo)) <= 1:
            self._emit((), "partition_noop")
            return
        for name, amount in self.ledger.adjudicate_partition(self.now):
            self._emit((name,), "slash", amount)

    def _originate(
        self, author: NodeId, dest: NodeId, payload_len: int, path
    ) -> Message | None:
        seq = self._msg_seq.get(author, 0)
        self._msg_seq[author] = seq + 1
        try:
            msg = build_message(
                (author, seq),
                author,
                dest,
                b"x" * payload_len,
                path,
                {
                    k: v
                    for k, v in self.ledger.edges.items()
                    if k not in self.ledger.pending_severance
                },
            )
        except node_mod.NodeError as exc:
            statically_valid = all(
                edge_key(a, b) in self.initial_edges for a, b in zip(path, path[1:])
            )
            if not statically_valid:
                raise SimError(str(exc)) from exc
            # the path was fine at scenario start but an edge has since been
            # severed; the originator declines to send
            self._emit((author,), f"originate_rejected dest={dest} path={'>'.join(path)}")
            return None
        node = self.nodes[author]
        actions = node.originate(msg, self.now, self)
        self.messages[msg.id] = MessageMeta(msg=msg, originated_at=self.now)
        node.cash -= msg.prepaid
        self.in_transit += msg.prepaid
        self._emit(
            (author,),
            f"originate msg={msg_tag(msg.id)} dest={dest} "
            f"path={'>'.join(msg.path)} budget={msg.round_trip_budget_ms}",
            msg.prepaid,
        )
        self._apply(node, actions)
        return msg

    # -- deliveries ----------------------------------------------------------------

    def _handle_deliver(
        self,
        kind: str,
        msg_id: MsgId,
        from_node: NodeId,
        to_node: NodeId,
        budget: Ms,
        amount: Money,
        upstream_due: Ms,
        proof: SeveranceProof | None,
    ) -> None:
        node = self.nodes[to_node]
        msg = self.messages[msg_id].msg
        if not node.online:
            self._emit((to_node,), f"lost msg={msg_tag(msg_id)} kind={kind}", amount or None)
            return
        if kind == "forward":
            self._emit(
                (to_node,),
                f"recv msg={msg_tag(msg_id)} kind=forward from={from_node} budget={budget}",
                amount,
            )
            if to_node == msg.path[1] and self.messages[msg_id].acked_at is None:
                self.messages[msg_id].acked_at = self.now
            actions = node.on_receive_forward(
                msg, from_node, budget, amount, upstream_due, self.now, self
            )
            self._apply(node, actions)
            return
        detail = f" edge={edge_tag(proof.edge)}" if proof is not None else ""
        self._emit(
            (to_node,), f"recv msg={msg_tag(msg_id)} kind={kind} from={from_node}{detail}"
        )
        outcome_kind = RESPONSE if kind == "response" else SEVERANCE_PROOF
        self._apply_outcome(node, msg_id, outcome_kind, proof)

    def _apply_outcome(
        self, node: NodeState, msg_id: MsgId, kind: str, proof: SeveranceProof | None
    ) -> None:
        self._release_slot(msg_id, node)
        actions = node.on_outcome(msg_id, kind, proof, self.now, self)
        self._apply(node, actions)
        pursuit = node.pursuit
        if pursuit is not None and pursuit.done == "answered" and not pursuit.announced:
            pursuit.announced = True
            self._emit(
                (node.name,), f"pursue_done target={pursuit.target} status=answered"
            )

    def _release_slot(self, msg_id: MsgId, node: NodeState) -> None:
        key = self.slots.pop((msg_id, node.name), None)
        if key is None:
            return
        self.in_flight_count[key] = self.in_flight_count.get(key, 1) - 1
        other = key[0] if node.name == key[1] else key[1]
        self._apply(node, node.on_slot_free(other, self.now, self))

    # -- wakes -----------------------------------------------------------------

    def _handle_wake(self, name: NodeId, kind: str, msg_id: MsgId | None) -> None:
        node = self.nodes[name]
        if kind == "giveup":
            hop = node.hops.get(msg_id)
            if hop is not None and hop.giveup_time == self.now:
                status = "pending" if hop.outcome_kind is None and not hop.closed else "met"
                self._emit(
                    (name,), f"due msg={msg_tag(msg_id)} status={status}"
                )
        if kind == "open_edge":
            self._reopen_edge(msg_id)  # msg_id carries the reopen spec here
            return
        self._apply(node, node.on_wake(kind, msg_id, self.now, self))

    # -- chain --------------------------------------------------------------------

    def _handle_finalize(self, proof: SeveranceProof) -> None:
        record = self.ledger.severance_log[proof.log_index]
        self.ledger.finalize_severance(proof, self.now)
        self._emit(record.edge, f"sever_final edge={edge_tag(record.edge)}")
        # the non-initiating endpoint learns the edge is gone at finality
        for name in record.edge:
            node = self.nodes[name]
            for msg_id in list(node.hops):
                hop = node.hops[msg_id]
                other = record.edge[0] if name == record.edge[1] else record.edge[1]
                if (
                    hop.downstream == other
                    and hop.outcome_kind is None
                    and not hop.closed
                ):
                    self._apply_outcome(node, msg_id, SEVERANCE_PROOF, proof)

    def _reopen_edge(self, spec: tuple) -> None:
        a, b, params = spec
        key = edge_key(a, b)
        if key in self.ledger.edges:
            return
        self.ledger.open_edge(a, b, params, self.now)
        self.chan_gen[key] += 1
        old = self.channels[key]
        self.channels[key] = ChannelState(
            endpoints=key,
            late_rate=old.late_rate,
            sync_interval_ms=old.sync_interval_ms,
            sync_phase_ms=old.sync_phase_ms,
            next_sync_time=old.next_sync_after(self.now),
        )
        self.edge_actual[key] = params.latency_promise_ms
        self._schedule_sync(key, self.channels[key].next_sync_time)
        self._emit(
            key,
            f"reopen edge={edge_tag(key)} latency={params.latency_promise_ms} "
            f"base={params.base_cost} byte={params.byte_cost}",
        )

    # -- syncs ----------------------------------------------------------------------

    def _handle_sync(self, key: tuple[NodeId, NodeId], gen: int) -> None:
        chan = self.channels.get(key)
        if chan is None or chan.closed or gen != self.chan_gen[key]:
            return
        active_before = chan.active()
        delivered: list[tuple[NodeId, MsgId, str, SeveranceProof | None]] = []
        for side in key:
            entries = self.pend.pop((key, side), [])
            for msg_id, to, kind, proof in entries:
                ob = chan.obligations.get((msg_id, side))
                if ob is not None and not ob.closed:
                    if ob.discharged_at is None:
                        chan.discharge(msg_id, side, self.now, kind)
                    ob.delivered = True
                hop = self.nodes[side].hops.get(msg_id)
                if hop is not None:
                    hop.delivered_upstream = True
                delivered.append((side, msg_id, kind, proof))

        funds = {side: self.nodes[side].cash for side in key}
        refuse = {
            side
            for side in key
            if self.nodes[side].policy.refuses_payment or not self.nodes[side].online
        }
        before_paid = {
            ob_key: ob.paid for ob_key, ob in chan.obligations.items()
        }
        payments, defaulted = chan.settle_sync(self.now, funds, refuse)
        for side, amount in payments.items():
            other = chan.other(side)
            self.nodes[side].cash -= amount
            self.nodes[other].cash += amount
            for ob_key, ob in chan.obligations.items():
                delta = ob.paid - before_paid.get(ob_key, 0)
                if ob.ower == side and delta > 0:
                    payer = self.nodes[side]
                    payer.paid_upstream[ob.msg_id] = (
                        payer.paid_upstream.get(ob.msg_id, 0) + delta
                    )
                    payee = self.nodes[other]
                    payee.received_downstream[ob.msg_id] = (
                        payee.received_downstream.get(ob.msg_id, 0) + delta
                    )
                    payee.note_profit(key, self.now, delta)

        if active_before or payments or defaulted or delivered:
            tokens = ["sync"]
            total = 0
            for side in key:
                if side in payments:
                    tokens.append(f"pay={side}:{payments[side]}")
                    total += payments[side]
            for _, msg_id, kind, proof in delivered:
                if proof is not None:
                    tokens.append(f"edge={edge_tag(proof.edge)}")
                tokens.append(f"deliver={msg_tag(msg_id)}")
            for side in sorted(defaulted):
                tokens.append(f"default={side}")
            self._emit(key, " ".join(tokens), total if (payments or active_before) else None)

        # hand delivered outcomes to the upstream side
        for side, msg_id, kind, proof in delivered:
            recipient = self.nodes[chan.other(side)]
            if msg_id in recipient.hops:
                self._apply_outcome(recipient, msg_id, kind, proof)

        for side in sorted(defaulted):
            msgs = [
                ob.msg_id
                for ob in chan.obligations.values()
                if ob.ower == side and not ob.closed
            ]
            for m in msgs:
                self.defaulted_obligations.add((m, side))
            counterparty = self.nodes[chan.other(side)]
            self._apply(counterparty, counterparty.on_channel_default(side, msgs, self.now, self))

        if not chan.closed:
            self._schedule_sync(key, chan.next_sync_time)

    # -- actions ----------------------------------------------------------------------

    def _apply(self, node: NodeState, actions: list) -> None:
        for action in actions:
            if isinstance(action, KeepFee):
                node.cash += action.amount
                self.in_transit -= action.amount
            elif isinstance(action, SendForward):
                self._do_send_forward(node, action)
            elif isinstance(action, SendResponse):
                self._do_send_outcome(node, action.msg_id, action.to, RESPONSE, None)
            elif isinstance(action, SendProof):
                self._do_send_outcome(
                    node, action.msg_id, action.to, SEVERANCE_PROOF, action.proof
                )
            elif isinstance(action, PendOutcome):
                key = edge_key(node.name, action.to)
                self.pend.setdefault((key, node.name), []).append(
                    (action.msg_id, action.to, action.kind, action.proof)
                )
            elif isinstance(action, Sever):
                self._do_sever(node, action)
            elif isinstance(action, Wake):
                self._schedule(action.time, "wake", (node.name, action.kind, action.msg_id))
            elif isinstance(action, Enqueue):
                self._emit(
                    (node.name,),
                    f"enqueue msg={msg_tag(action.msg.id)} edge="
                    f"{edge_tag(edge_key(node.name, action.edge_other))}",
                    action.amount,
                )
            elif isinstance(action, RecordLoss):
                self._emit(
                    (node.name,),
                    f"loss msg={msg_tag(action.msg_id)} edge="
                    f"{edge_tag(edge_key(node.name, action.edge_other))}",
                    action.amount,
                )
            elif isinstance(action, ReportIsolation):
                self._do_report_isolation(node, action.target)
            elif isinstance(action, PursueNext):
                self._do_pursue_next(node)
            else:
                raise SimError(f"unknown action {action!r}")

    def _do_send_forward(self, node: NodeState, action: SendForward) -> None:
        msg = action.msg
        key = edge_key(node.name, action.to)
        chan = self.channels[key]
        promise = self.ledger.edges[key].latency_promise_ms
        due = node_mod.outcome_deadline(self.now, action.budget, promise)
        if not chan.closed:
            chan.record_forward(msg.id, action.to, due, action.amount)
        self.in_flight_count[key] = self.in_flight_count.get(key, 0) + 1
        self.slots[(msg.id, node.name)] = key
        self._emit(
            (node.name,),
            f"send msg={msg_tag(msg.id)} kind=forward to={action.to} "
            f"budget={action.budget} due={due}",
            action.amount,
        )
        self._schedule(
            self.now + self.edge_actual[key],
            "deliver",
            ("forward", msg.id, node.name, action.to, action.budget, action.amount, due, None),
        )

    def _do_send_outcome(
        self,
        node: NodeState,
        msg_id: MsgId,
        to: NodeId,
        kind: str,
        proof: SeveranceProof | None,
    ) -> None:
        key = edge_key(node.name, to)
        chan = self.channels.get(key)
        if chan is not None and not chan.closed:
            ob = chan.obligations.get((msg_id, node.name))
            if ob is not None and ob.discharged_at is None and not ob.closed:
                chan.discharge(msg_id, node.name, self.now, kind)
                ob.delivered = True
        hop = node.hops.get(msg_id)
        if hop is not None and hop.upstream == to:
            hop.delivered_upstream = True
        wire = "response" if kind == RESPONSE else "proof"
        detail = f" edge={edge_tag(proof.edge)}" if proof is not None else ""
        self._emit(
            (node.name,), f"send msg={msg_tag(msg_id)} kind={wire} to={to}{detail}"
        )
        actual = self.edge_actual.get(key, 1)
        self._schedule(
            self.now + actual,
            "deliver",
            (wire, msg_id, node.name, to, 0, 0, 0, proof),
        )

    def _do_sever(self, node: NodeState, action: Sever) -> None:
        key = edge_key(node.name, action.other)
        proof = None
        if key in self.ledger.edges and key not in self.ledger.pending_severance:
            proof = self.ledger.initiate_severance(node.name, action.other, self.now)
            self._emit(
                (node.name,),
                f"sever_init edge={edge_tag(key)} by={node.name}",
                self.ledger.params.severance_penalty,
            )
            record = self.ledger.severance_log[proof.log_index]
            self._schedule(record.finalize_time, "chain_finalize", (proof,))
        else:
            proof = self.proof_for_edge(node.name, action.other)
            if proof is None:
                raise SimError(f"cannot sever unknown edge {edge_tag(key)}")
        chan = self.channels.get(key)
        if chan is not None and not chan.closed:
            chan.closed = True
            for ob in chan.obligations.values():
                ob.closed = True
        for holder_name in key:
            holder = self.nodes[holder_name]
            for (m, who), slot_key in list(self.slots.items()):
                if who == holder_name and slot_key == key:
                    del self.slots[(m, who)]
                    self.in_flight_count[key] = self.in_flight_count.get(key, 1) - 1
            queued = holder.queues.pop(key, None)
            if queued:
                for msg_id, amount in queued:
                    holder.cash += amount
                    self.in_transit -= amount
        # obligations this node holds downstream over the broken edge resolve now
        for msg_id in list(node.hops):
            hop = node.hops[msg_id]
            if hop.downstream != action.other or hop.outcome_kind is not None or hop.closed:
                continue
            if action.silent:
                hop.outcome_kind = SEVERANCE_PROOF
                hop.outcome_proof = proof
                node.held_proofs[proof.edge] = proof
            else:
                self._apply_outcome(node, msg_id, SEVERANCE_PROOF, proof)
        # hops owed to the severed counterparty can never be delivered
        for holder_name in key:
            holder = self.nodes[holder_name]
            other = key[0] if holder_name == key[1] else key[1]
            for hop in holder.hops.values():
                if hop.upstream == other and not hop.delivered_upstream:
                    hop.closed = True
        if action.reopen is not None:
            record = self.ledger.severance_log[proof.log_index]
            self._schedule(
                max(record.finalize_time, self.now),
                "wake",
                (node.name, "open_edge", (node.name, action.other, action.reopen)),
            )

    def _do_report_isolation(self, node: NodeState, target: NodeId) -> None:
        credits = self.ledger.report_isolation(node.name, target, self.now)
        total = sum(credits.values())
        detail = ",".join(f"{k}:{v}" for k, v in sorted(credits.items()))
        self._emit(
            (node.name,),
            f"isolate node={target} by={node.name} credits={detail or 'none'}",
            total,
        )
        if node.pursuit is not None and node.pursuit.target == target:
            self._emit(
                (node.name,), f"pursue_done target={target} status=isolated"
            )

    def _do_pursue_next(self, node: NodeState) -> None:
        pursuit = node.pursuit
        payload_len = node.pursuit_payload
        while pursuit.next_index < len(pursuit.paths):
            path = pursuit.paths[pursuit.next_index]
            pursuit.next_index += 1
            usable = True
            known_proof = None
            for a, b in zip(path, path[1:]):
                if self.edge_params(a, b) is None:
                    usable = False
                    known_proof = self.proof_for_edge(a, b)
                    break
            if not usable:
                # a prior severance already covers this route
                if known_proof is not None:
                    isolated, ready = self.isolation_status(pursuit.target)
                    if isolated:
                        pursuit.done = "isolated"
                        self._schedule(
                            max(self.now, ready),
                            "wake",
                            (node.name, "pursue_report", None),
                        )
                        return
                continue
            msg = self._originate(node.name, pursuit.target, payload_len, path)
            pursuit.active_msg = msg.id
            return
        pursuit.done = "exhausted"
        self._emit(
            (node.name,), f"pursue_done target={pursuit.target} status=exhausted"
        )


def run(scenario: Scenario) -> RunResult:
    """Execute a scenario to quiescence or its horizon."""
    return Engine(scenario).run()


def assert_trichotomy(result: RunResult, msg_id: MsgId) -> str:
    """Classify a message's terminal outcome.

    One of: response, severance-proof, fully-paid-lateness, or the
    protocol-violation verdict ORIGINATOR-CHANNEL-DEFAULT (the first hop
    defaulted on a due payment toward the originator).
    """
    meta = result.messages.get(msg_id)
    if meta is None:
        raise SimError(f"unknown message {msg_id}")
    msg = meta.msg
    first_hop = msg.path[1]
    if (msg_id, first_hop) in result.defaulted_obligations:
        return OUTCOME_DEFAULT
    author = result.nodes[msg.author]
    hop = author.hops.get(msg_id)
    if hop is not None and hop.outcome_kind == RESPONSE:
        return OUTCOME_RESPONSE
    if hop is not None and hop.outcome_kind == SEVERANCE_PROOF:
        proof = hop.outcome_proof
        if (
            proof is not None
            and proof.edge in msg.edges()
            and result.ledger.verify_severance_proof(proof)
        ):
            return OUTCOME_SEVERANCE_PROOF
    return OUTCOME_PAID_LATENESS
