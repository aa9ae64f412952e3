"""Per-node protocol state machine.

Nodes originate requests, relay them along explicit paths with per-hop
timeout arithmetic, respond as destinations, and react to downstream
misbehavior through pluggable policies. Handlers are reducers: they take an
event plus a read-only environment and return a list of actions for the
simulator to execute, so they stay deterministic and easy to test in
isolation.

Timeout arithmetic (all times integer ms):

* a message's round-trip budget is twice the sum of promised latencies on
  its path, and the whole budget is attached to the first forward;
* each relay forwards with the received budget minus twice its upstream
  edge's promise, and gives up on the downstream outcome when that reduced
  budget elapses past its own acknowledgment;
* the obligation created by a forward is due (outcome *sent* upstream) at
  ``send_time + budget - edge_promise``, so with actual latencies equal to
  promises every hop discharges exactly on time.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .channel import RESPONSE, SEVERANCE_PROOF, Ms, Money, MsgId
from .ledger import SeveranceProof
from .topology import EdgeParams, NodeId, edge_key


class NodeError(ValueError):
    pass


# -- message ------------------------------------------------------------------


@dataclass(frozen=True)
class Message:
    id: MsgId
    author: NodeId
    dest: NodeId
    payload: bytes
    path: tuple[NodeId, ...]
    round_trip_budget_ms: Ms
    prepaid: Money

    def hop_after(self, node: NodeId) -> NodeId | None:
        """Next node on the path, None when ``node`` is the destination."""
        idx = self.path.index(node)
        return self.path[idx + 1] if idx + 1 < len(self.path) else None

    def hop_before(self, node: NodeId) -> NodeId | None:
        idx = self.path.index(node)
        return self.path[idx - 1] if idx > 0 else None

    def edges(self) -> list[tuple[NodeId, NodeId]]:
        return [edge_key(a, b) for a, b in zip(self.path, self.path[1:])]


def build_message(
    msg_id: MsgId,
    author: NodeId,
    dest: NodeId,
    payload: bytes,
    path: Sequence[NodeId],
    edges: dict[tuple[NodeId, NodeId], EdgeParams],
) -> Message:
    """Validate the path against the edge map and derive budget and prepaid."""
    path = tuple(path)
    if len(path) < 2:
        raise NodeError("degenerate path: author and destination coincide")
    if path[0] != author or path[-1] != dest:
        raise NodeError("path must run from author to destination")
    if len(set(path)) != len(path):
        raise NodeError("path revisits a node")
    budget = 0
    prepaid = 0
    for a, b in zip(path, path[1:]):
        params = edges.get(edge_key(a, b))
        if params is None:
            raise NodeError(f"path uses missing edge {a}-{b}")
        budget += 2 * params.latency_promise_ms
        prepaid += params.message_fee(len(payload))
    return Message(
        id=msg_id,
        author=author,
        dest=dest,
        payload=payload,
        path=path,
        round_trip_budget_ms=budget,
        prepaid=prepaid,
    )


def forwarded_budget(budget: Ms, upstream_promise: Ms) -> Ms:
    """Round-trip budget passed downstream after one hop."""
    return budget - 2 * upstream_promise


def outcome_deadline(send_time: Ms, budget: Ms, edge_promise: Ms) -> Ms:
    """When the receiver of a forward must *send* the outcome back."""
    return send_time + budget - edge_promise


# -- policies -----------------------------------------------------------------

HONEST_POLICIES = ("break_immediately", "wait_sync", "wait_for", "adaptive")
ADVERSARIAL_POLICIES = ("deadbeat", "sever_withhold_default")


@dataclass(frozen=True)
class RelayPolicy:
    """Reaction to downstream timeouts plus the bandwidth-overflow choice."""

    kind: str = "adaptive"
    wait_ms: Ms = 0
    window_ms: Ms = 3_600_000
    threshold: Money = 0
    bandwidth: str = "queue"  # or "reprice"
    reprice_params: EdgeParams | None = None

    def __post_init__(self) -> None:
        if self.kind not in HONEST_POLICIES + ADVERSARIAL_POLICIES:
            raise NodeError(f"unknown policy {self.kind!r}")
        if self.wait_ms < 0:
            raise NodeError("wait duration must be >= 0")
        if self.bandwidth not in ("queue", "reprice"):
            raise NodeError(f"unknown bandwidth policy {self.bandwidth!r}")
        if self.bandwidth == "reprice" and self.reprice_params is None:
            raise NodeError("reprice bandwidth policy needs new edge params")

    @property
    def honest(self) -> bool:
        return self.kind in HONEST_POLICIES

    @property
    def refuses_payment(self) -> bool:
        return self.kind in ADVERSARIAL_POLICIES


def parse_policy(tokens: Sequence[str]) -> RelayPolicy:
    """Parse scenario-file policy tokens, e.g. ``wait_for:8900 bandwidth=queue``."""
    if not tokens:
        return RelayPolicy()
    spec = tokens[0]
    name, _, args = spec.partition(":")
    kwargs: dict = {"kind": name}
    if name == "wait_for":
        if not args:
            raise NodeError("wait_for policy needs a duration, e.g. wait_for:500")
        kwargs["wait_ms"] = int(args)
    elif name == "adaptive" and args:
        parts = args.split(":")
        kwargs["window_ms"] = int(parts[0])
        if len(parts) > 1:
            kwargs["threshold"] = int(parts[1])
    elif args and name not in ("wait_for", "adaptive"):
        raise NodeError(f"policy {name} takes no arguments")
    for extra in tokens[1:]:
        key, _, value = extra.partition("=")
        if key != "bandwidth":
            raise NodeError(f"unknown policy option {extra!r}")
        if value == "queue":
            kwargs["bandwidth"] = "queue"
        elif value.startswith("reprice:"):
            nums = value.split(":")[1:]
            if len(nums) != 3:
                raise NodeError("reprice needs latency:base:byte")
            kwargs["bandwidth"] = "reprice"
            kwargs["reprice_params"] = EdgeParams(int(nums[0]), int(nums[1]), int(nums[2]))
        else:
            raise NodeError(f"unknown bandwidth policy {value!r}")
    return RelayPolicy(**kwargs)


def policy_to_tokens(policy: RelayPolicy) -> list[str]:
    if policy.kind == "wait_for":
        head = f"wait_for:{policy.wait_ms}"
    elif policy.kind == "adaptive":
        head = f"adaptive:{policy.window_ms}:{policy.threshold}"
    else:
        head = policy.kind
    tokens = [head]
    if policy.bandwidth == "reprice":
        p = policy.reprice_params
        tokens.append(f"bandwidth=reprice:{p.latency_promise_ms}:{p.base_cost}:{p.byte_cost}")
    return tokens


# -- actions ------------------------------------------------------------------


@dataclass(frozen=True)
class SendForward:
    msg: Message
    to: NodeId
    budget: Ms
    amount: Money


@dataclass(frozen=True)
class SendResponse:
    msg_id: MsgId
    to: NodeId


@dataclass(frozen=True)
class SendProof:
    msg_id: MsgId
    to: NodeId
    proof: SeveranceProof


@dataclass(frozen=True)
class PendOutcome:
    """Hold an outcome for delivery at the next sync of the upstream channel."""

    msg_id: MsgId
    to: NodeId
    kind: str
    proof: SeveranceProof | None


@dataclass(frozen=True)
class KeepFee:
    amount: Money


@dataclass(frozen=True)
class Sever:
    other: NodeId
    reopen: EdgeParams | None = None
    silent: bool = False  # do not volunteer the proof to anyone


@dataclass(frozen=True)
class Wake:
    kind: str  # respond | giveup | proof_push | pursue_report
    msg_id: MsgId | None
    time: Ms


@dataclass(frozen=True)
class Enqueue:
    msg: Message
    edge_other: NodeId
    budget: Ms
    amount: Money


@dataclass(frozen=True)
class RecordLoss:
    msg_id: MsgId
    edge_other: NodeId
    amount: Money


@dataclass(frozen=True)
class ReportIsolation:
    target: NodeId


@dataclass(frozen=True)
class PursueNext:
    target: NodeId


Action = object


# -- node state -----------------------------------------------------------------


@dataclass
class HopObligation:
    """This node's view of one relayed message."""

    msg: Message
    upstream: NodeId | None
    downstream: NodeId | None
    budget_in: Ms
    budget_out: Ms
    ack_time: Ms
    upstream_due: Ms  # when the outcome must leave this node
    giveup_time: Ms | None
    outcome_kind: str | None = None
    outcome_proof: SeveranceProof | None = None
    delivered_upstream: bool = False
    closed: bool = False


@dataclass
class Pursuit:
    target: NodeId
    paths: tuple[tuple[NodeId, ...], ...]
    next_index: int = 0
    active_msg: MsgId | None = None
    done: str | None = None  # isolated | answered | exhausted
    announced: bool = False


@dataclass
class NodeState:
    name: NodeId
    policy: RelayPolicy = field(default_factory=RelayPolicy)
    cash: Money = 0
    online: bool = True
    responds: bool = True
    respond_delay_ms: Ms = 0
    hops: dict[MsgId, HopObligation] = field(default_factory=dict)
    held_proofs: dict[tuple[NodeId, NodeId], SeveranceProof] = field(default_factory=dict)
    queues: dict[tuple[NodeId, NodeId], deque] = field(default_factory=dict)
    paid_upstream: dict[MsgId, Money] = field(default_factory=dict)
    received_downstream: dict[MsgId, Money] = field(default_factory=dict)
    profit_log: dict[tuple[NodeId, NodeId], list[tuple[Ms, Money]]] = field(default_factory=dict)
    uncompensated_loss: Money = 0
    pursuit: Pursuit | None = None
    pursuit_payload: int = 0

    # -- bookkeeping helpers -------------------------------------------------

    def edge_profit(self, key: tuple[NodeId, NodeId], now: Ms, window_ms: Ms) -> Money:
        entries = self.profit_log.get(key, [])
        return sum(amount for t, amount in entries if now - t <= window_ms)

    def note_profit(self, key: tuple[NodeId, NodeId], now: Ms, amount: Money) -> None:
        self.profit_log.setdefault(key, []).append((now, amount))

    # -- protocol handlers ----------------------------------------------------

    def originate(self, msg: Message, now: Ms, env) -> list[Action]:
        if msg.id in self.hops:
            raise NodeError(f"duplicate message {msg.id}")
        if self.cash < msg.prepaid:
            raise NodeError(f"{self.name} cannot fund prepaid {msg.prepaid}")
        first = msg.path[1]
        self.hops[msg.id] = HopObligation(
            msg=msg,
            upstream=None,
            downstream=first,
            budget_in=msg.round_trip_budget_ms,
            budget_out=msg.round_trip_budget_ms,
            ack_time=now,
            upstream_due=now + msg.round_trip_budget_ms,
            giveup_time=now + msg.round_trip_budget_ms,
        )
        return [
            SendForward(msg, first, msg.round_trip_budget_ms, msg.prepaid),
            Wake("giveup", msg.id, now + msg.round_trip_budget_ms),
        ]

    def on_receive_forward(
        self,
        msg: Message,
        from_node: NodeId,
        budget: Ms,
        amount: Money,
        upstream_due: Ms,
        now: Ms,
        env,
    ) -> list[Action]:
        if self.name not in msg.path:
            raise NodeError(f"{self.name} is not on the path of {msg.id}")
        upstream_params = env.edge_params(from_node, self.name)
        promise = upstream_params.latency_promise_ms if upstream_params else 0
        budget_out = forwarded_budget(budget, promise)
        hop = HopObligation(
            msg=msg,
            upstream=from_node,
            downstream=msg.hop_after(self.name),
            budget_in=budget,
            budget_out=budget_out,
            ack_time=now,
            upstream_due=upstream_due,
            giveup_time=None,
        )
        self.hops[msg.id] = hop

        if hop.downstream is None:  # destination
            self.note_profit(edge_key(from_node, self.name), now, amount)
            actions: list[Action] = [KeepFee(amount)]
            if self.responds and self.policy.kind != "deadbeat":
                if self.respond_delay_ms == 0:
                    actions.append(SendResponse(msg.id, from_node))
                else:
                    actions.append(Wake("respond", msg.id, now + self.respond_delay_ms))
            return actions

        if self.policy.kind == "deadbeat":
            # pockets the fee and sits on the message
            return [KeepFee(amount)]

        down_edge = env.edge_params(self.name, hop.downstream)
        if down_edge is None:
            # the next edge is gone; answer with the recorded proof
            proof = env.proof_for_edge(self.name, hop.downstream)
            if proof is None:
                raise NodeError(
                    f"edge {self.name}-{hop.downstream} missing with no severance record"
                )
            return [KeepFee(amount)] + self._outcome_ready(
                hop, SEVERANCE_PROOF, proof, now, env
            )

        capacity = env.edge_capacity(self.name, hop.downstream)
        if capacity is not None and env.in_flight(self.name, hop.downstream) >= capacity:
            return self._on_bandwidth_full(hop, amount, now, env)

        return self._forward(hop, amount, now, env)

    def _forward(self, hop: HopObligation, amount: Money, now: Ms, env) -> list[Action]:
        down_edge = env.edge_params(self.name, hop.downstream)
        margin = down_edge.message_fee(len(hop.msg.payload))
        self.note_profit(edge_key(self.name, hop.downstream), now, margin)
        hop.giveup_time = now + hop.budget_out
        return [
            KeepFee(margin),
            SendForward(hop.msg, hop.downstream, hop.budget_out, amount - margin),
            Wake("giveup", hop.msg.id, hop.giveup_time),
        ]

    def _on_bandwidth_full(
        self, hop: HopObligation, amount: Money, now: Ms, env
    ) -> list[Action]:
        if self.policy.bandwidth == "queue":
            key = edge_key(self.name, hop.downstream)
            self.queues.setdefault(key, deque()).append((hop.msg.id, amount))
            return [Enqueue(hop.msg, hop.downstream, hop.budget_out, amount)]
        # break-and-reprice: refuse with an immediate proof, reopen pricier
        actions: list[Action] = [
            KeepFee(amount),
            Sever(hop.downstream, reopen=self.policy.reprice_params),
        ]
        return actions

    def on_slot_free(self, edge_other: NodeId, now: Ms, env) -> list[Action]:
        """A downstream slot opened up; forward the oldest queued message."""
        key = edge_key(self.name, edge_other)
        queue = self.queues.get(key)
        if not queue:
            return []
        msg_id, amount = queue.popleft()
        hop = self.hops[msg_id]
        if hop.outcome_kind is not None or hop.closed:
            return self.on_slot_free(edge_other, now, env)
        if env.edge_params(self.name, edge_other) is None:
            proof = env.proof_for_edge(self.name, edge_other)
            return self._outcome_ready(hop, SEVERANCE_PROOF, proof, now, env)
        return self._forward(hop, amount, now, env)

    def on_outcome(
        self,
        msg_id: MsgId,
        kind: str,
        proof: SeveranceProof | None,
        now: Ms,
        env,
    ) -> list[Action]:
        """An outcome arrived from downstream (or from severing the edge ourselves)."""
        hop = self.hops.get(msg_id)
        if hop is None:
            raise NodeError(f"{self.name} has no obligation for {msg_id}")
        if proof is not None:
            self.held_proofs[proof.edge] = proof
        if hop.outcome_kind is not None:
            return []  # first outcome wins
        hop.outcome_kind = kind
        hop.outcome_proof = proof
        if hop.upstream is None:
            return self._pursuit_step(hop, kind, now, env)
        return self._deliver_upstream(hop, now, env)

    def _outcome_ready(
        self, hop: HopObligation, kind: str, proof, now: Ms, env
    ) -> list[Action]:
        if proof is not None:
            self.held_proofs[proof.edge] = proof
        if hop.outcome_kind is not None:
            return []
        hop.outcome_kind = kind
        hop.outcome_proof = proof
        if hop.upstream is None:
            return self._pursuit_step(hop, kind, now, env)
        return self._deliver_upstream(hop, now, env)

    def _deliver_upstream(self, hop: HopObligation, now: Ms, env) -> list[Action]:
        if hop.closed or hop.delivered_upstream:
            return []
        if hop.outcome_kind == RESPONSE:
            # responses relay at once; accrued fees settle at the next sync
            hop.delivered_upstream = True
            return [SendResponse(hop.msg.id, hop.upstream)]
        if now <= hop.upstream_due:
            hop.delivered_upstream = True
            return [SendProof(hop.msg.id, hop.upstream, hop.outcome_proof)]
        # already late: the proof rides the next sync with the final payment
        return [PendOutcome(hop.msg.id, hop.upstream, hop.outcome_kind, hop.outcome_proof)]

    def on_giveup(self, msg_id: MsgId, now: Ms, env) -> list[Action]:
        """The downstream wait expired with no outcome; apply the policy."""
        hop = self.hops.get(msg_id)
        if hop is None or hop.outcome_kind is not None or hop.closed:
            return []
        kind = self.policy.kind
        if kind == "break_immediately":
            return [Sever(hop.downstream)]
        if kind == "wait_sync":
            # hold out (paying upstream) until the next settlement with the
            # upstream neighbor, then break and bundle the proof into it
            ref = hop.upstream if hop.upstream is not None else hop.downstream
            wake_at = env.next_sync_after(self.name, ref, now - 1)
            if now > (hop.giveup_time or now) or wake_at <= now:
                return [Sever(hop.downstream)]
            return [Wake("giveup", msg_id, wake_at)]
        if kind == "wait_for":
            if now >= (hop.giveup_time or now) + self.policy.wait_ms:
                return [Sever(hop.downstream)]
            return [Wake("giveup", msg_id, hop.giveup_time + self.policy.wait_ms)]
        if kind == "sever_withhold_default":
            ref = hop.upstream if hop.upstream is not None else hop.downstream
            push_at = env.next_sync_after(self.name, ref, now) - 1
            return [
                Sever(hop.downstream, silent=True),
                Wake("proof_push", msg_id, max(push_at, now)),
            ]
        # adaptive and deadbeat wait for sync-level evidence (or forever)
        return []

    def on_wake(self, kind: str, msg_id: MsgId | None, now: Ms, env) -> list[Action]:
        if kind == "respond":
            hop = self.hops.get(msg_id)
            if hop is None or hop.closed:
                return []
            return [SendResponse(msg_id, hop.upstream)]
        if kind == "giveup":
            return self.on_giveup(msg_id, now, env)
        if kind == "proof_push":
            hop = self.hops.get(msg_id)
            if hop is None or hop.delivered_upstream or hop.upstream is None:
                return []
            proof = hop.outcome_proof
            if proof is None:
                return []
            hop.delivered_upstream = True
            return [SendProof(msg_id, hop.upstream, proof)]
        if kind == "pursue_report":
            if self.pursuit is not None and self.pursuit.done == "isolated":
                return [ReportIsolation(self.pursuit.target)]
            return []
        raise NodeError(f"unknown wake kind {kind!r}")

    def on_channel_default(
        self, other: NodeId, msg_ids: Iterable[MsgId], now: Ms, env
    ) -> list[Action]:
        """The counterparty refused (or could not make) a due sync payment."""
        if not self.policy.honest:
            return []
        key = edge_key(self.name, other)
        actions: list[Action] = []
        affected = False
        for msg_id in msg_ids:
            hop = self.hops.get(msg_id)
            if hop is None or hop.downstream != other:
                continue
            affected = True
            loss = self.paid_upstream.get(msg_id, 0) - self.received_downstream.get(msg_id, 0)
            if loss > 0:
                self.uncompensated_loss += loss
                self.note_profit(key, now, -loss)
                actions.append(RecordLoss(msg_id, other, loss))
        if not affected:
            return actions
        if self.policy.kind == "adaptive":
            profit = self.edge_profit(key, now, self.policy.window_ms)
            if profit < self.policy.threshold and env.edge_params(self.name, other):
                actions.append(Sever(other))
        elif env.edge_params(self.name, other):
            actions.append(Sever(other))
        return actions

    # -- pursuit ---------------------------------------------------------------

    def start_pursuit(
        self, target: NodeId, paths: Sequence[Sequence[NodeId]], now: Ms
    ) -> list[Action]:
        self.pursuit = Pursuit(target=target, paths=tuple(tuple(p) for p in paths))
        if not self.pursuit.paths:
            self.pursuit.done = "exhausted"
            return []
        return [PursueNext(target)]

    def _pursuit_step(self, hop: HopObligation, kind: str, now: Ms, env) -> list[Action]:
        """Outcome arrived for a message this node originated."""
        pursuit = self.pursuit
        if pursuit is None or pursuit.active_msg != hop.msg.id or pursuit.done:
            return []
        if kind == RESPONSE:
            pursuit.done = "answered"
            return []
        isolated, ready_at = env.isolation_status(pursuit.target)
        if isolated:
            pursuit.done = "isolated"
            return [Wake("pursue_report", hop.msg.id, max(now, ready_at))]
        return [PursueNext(pursuit.target)]
