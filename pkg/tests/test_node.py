import pytest

from porsim.channel import RESPONSE, SEVERANCE_PROOF
from porsim.ledger import SeveranceProof
from porsim.node import (
    NodeError,
    NodeState,
    PendOutcome,
    RelayPolicy,
    SendForward,
    SendProof,
    SendResponse,
    Sever,
    Wake,
    build_message,
    forwarded_budget,
    outcome_deadline,
    parse_policy,
)
from porsim.topology import EdgeParams, edge_key


EDGES = {
    ("Alex", "Alice"): EdgeParams(100, base_cost=1),
    ("Alice", "Bob"): EdgeParams(200, base_cost=1),
    ("Bob", "Carol"): EdgeParams(100, base_cost=1),
    ("Bob", "Eve"): EdgeParams(100, base_cost=1),
    ("Dave", "Eve"): EdgeParams(100, base_cost=1),
}


class StubEnv:
    """Just enough environment for exercising node reducers directly."""

    def __init__(self, edges=EDGES, missing=(), proofs=None, next_sync=1600):
        self.edges = dict(edges)
        self.missing = {edge_key(*pair) for pair in missing}
        self.proofs = proofs or {}
        self.next_sync = next_sync

    def edge_params(self, a, b):
        key = edge_key(a, b)
        if key in self.missing:
            return None
        return self.edges.get(key)

    def proof_for_edge(self, a, b):
        return self.proofs.get(edge_key(a, b))

    def edge_capacity(self, a, b):
        return None

    def in_flight(self, a, b):
        return 0

    def next_sync_after(self, a, b, t):
        return self.next_sync

    def isolation_status(self, target):
        return False, 0


def carol_message():
    return build_message(
        ("Alex", 0), "Alex", "Carol", b"", ["Alex", "Alice", "Bob", "Carol"], EDGES
    )


class TestBudgetArithmetic:
    def test_round_trip_budget_is_twice_the_one_way_sum(self):
        msg = carol_message()
        assert msg.round_trip_budget_ms == 800  # 2 * (100 + 200 + 100)

    def test_per_hop_decrement_is_twice_the_upstream_promise(self):
        assert forwarded_budget(800, 100) == 600
        assert forwarded_budget(600, 200) == 200

    def test_outcome_deadline_leaves_time_for_the_return_leg(self):
        assert outcome_deadline(0, 1000, 100) == 900
        assert outcome_deadline(100, 800, 200) == 700

    def test_degenerate_path_is_an_error(self):
        with pytest.raises(NodeError):
            build_message(("Alex", 0), "Alex", "Alex", b"", ["Alex"], EDGES)

    def test_prepaid_includes_byte_costs(self):
        edges = {("A", "B"): EdgeParams(50, base_cost=1, byte_cost=2)}
        msg = build_message(("A", 0), "A", "B", b"0123456789", ["A", "B"], edges)
        assert msg.prepaid == 21

    def test_path_must_use_existing_edges(self):
        with pytest.raises(NodeError):
            build_message(("Alex", 0), "Alex", "Eve", b"", ["Alex", "Eve"], EDGES)

    def test_path_may_not_revisit_a_node(self):
        with pytest.raises(NodeError):
            build_message(
                ("Alex", 0), "Alex", "Eve", b"",
                ["Alex", "Alice", "Bob", "Eve", "Dave", "Eve"], EDGES,
            )


class TestRelayForwarding:
    def test_bob_forwards_with_200ms_timeout(self):
        # receives at 300 carrying 600ms, subtracts twice the 200ms upstream
        bob = NodeState("Bob", policy=RelayPolicy(kind="wait_sync"))
        msg = carol_message()
        actions = bob.on_receive_forward(
            msg, "Alice", budget=600, amount=2, upstream_due=500, now=300, env=StubEnv()
        )
        forward = next(a for a in actions if isinstance(a, SendForward))
        assert forward.to == "Carol"
        assert forward.budget == 200
        wake = next(a for a in actions if isinstance(a, Wake))
        assert wake.time == 500  # 300 + 200

    def test_destination_responds_in_the_same_tick(self):
        carol = NodeState("Carol")
        msg = carol_message()
        actions = carol.on_receive_forward(
            msg, "Bob", budget=200, amount=1, upstream_due=400, now=400, env=StubEnv()
        )
        assert any(isinstance(a, SendResponse) for a in actions)

    def test_withholding_destination_stays_silent(self):
        eve = NodeState("Eve", responds=False)
        msg = build_message(
            ("Bob", 0), "Bob", "Eve", b"", ["Bob", "Eve"], EDGES
        )
        actions = eve.on_receive_forward(
            msg, "Bob", budget=200, amount=1, upstream_due=100, now=100, env=StubEnv()
        )
        assert not any(isinstance(a, SendResponse) for a in actions)

    def test_missing_next_edge_returns_the_recorded_proof(self):
        proof = SeveranceProof("L0", 0, ("Bob", "Carol"), "sev:L0:0:Bob-Carol")
        env = StubEnv(missing=[("Bob", "Carol")], proofs={("Bob", "Carol"): proof})
        bob = NodeState("Bob", policy=RelayPolicy(kind="wait_sync"))
        actions = bob.on_receive_forward(
            carol_message(), "Alice", budget=600, amount=2, upstream_due=500, now=300, env=env
        )
        send = next(a for a in actions if isinstance(a, SendProof))
        assert send.proof is proof
        assert send.to == "Alice"


class TestGiveupPolicies:
    def primed_bob(self, kind, **kwargs):
        bob = NodeState("Bob", policy=RelayPolicy(kind=kind, **kwargs))
        msg = build_message(
            ("Alex", 0), "Alex", "Dave", b"", ["Alex", "Alice", "Bob", "Eve", "Dave"], EDGES
        )
        bob.on_receive_forward(
            msg, "Alice", budget=800, amount=2, upstream_due=700, now=300, env=StubEnv()
        )
        return bob, msg

    def test_break_immediately_severs_at_the_window(self):
        bob, msg = self.primed_bob("break_immediately")
        actions = bob.on_giveup(msg.id, now=700, env=StubEnv())
        assert actions == [Sever("Eve")]

    def test_wait_sync_defers_to_the_next_upstream_sync(self):
        bob, msg = self.primed_bob("wait_sync")
        actions = bob.on_giveup(msg.id, now=700, env=StubEnv(next_sync=1600))
        assert actions == [Wake("giveup", msg.id, 1600)]
        actions = bob.on_giveup(msg.id, now=1600, env=StubEnv(next_sync=2600))
        assert actions == [Sever("Eve")]

    def test_wait_for_severs_after_the_configured_wait(self):
        bob, msg = self.primed_bob("wait_for", wait_ms=8900)
        actions = bob.on_giveup(msg.id, now=700, env=StubEnv())
        assert actions == [Wake("giveup", msg.id, 9600)]
        actions = bob.on_giveup(msg.id, now=9600, env=StubEnv())
        assert actions == [Sever("Eve")]

    def test_adaptive_waits_for_sync_evidence(self):
        bob, msg = self.primed_bob("adaptive")
        assert bob.on_giveup(msg.id, now=700, env=StubEnv()) == []

    def test_outcome_cancels_the_giveup(self):
        bob, msg = self.primed_bob("break_immediately")
        bob.on_outcome(msg.id, RESPONSE, None, now=650, env=StubEnv())
        assert bob.on_giveup(msg.id, now=700, env=StubEnv()) == []


class TestOutcomeDelivery:
    def late_relay(self):
        alice = NodeState("Alice", policy=RelayPolicy(kind="adaptive"))
        msg = build_message(
            ("Alex", 0), "Alex", "Dave", b"", ["Alex", "Alice", "Bob", "Eve", "Dave"], EDGES
        )
        alice.on_receive_forward(
            msg, "Alex", budget=1000, amount=4, upstream_due=900, now=100, env=StubEnv()
        )
        return alice, msg

    def test_on_time_proof_relays_immediately(self):
        alice, msg = self.late_relay()
        proof = SeveranceProof("L0", 0, ("Bob", "Eve"), "t")
        actions = alice.on_outcome(msg.id, SEVERANCE_PROOF, proof, now=900, env=StubEnv())
        assert any(isinstance(a, SendProof) for a in actions)

    def test_late_proof_rides_the_next_sync(self):
        alice, msg = self.late_relay()
        proof = SeveranceProof("L0", 0, ("Bob", "Eve"), "t")
        actions = alice.on_outcome(msg.id, SEVERANCE_PROOF, proof, now=1600, env=StubEnv())
        assert actions == [PendOutcome(msg.id, "Alex", SEVERANCE_PROOF, proof)]

    def test_late_response_still_relays_immediately(self):
        alice, msg = self.late_relay()
        actions = alice.on_outcome(msg.id, RESPONSE, None, now=1600, env=StubEnv())
        assert actions == [SendResponse(msg.id, "Alex")]

    def test_second_outcome_is_ignored(self):
        alice, msg = self.late_relay()
        alice.on_outcome(msg.id, RESPONSE, None, now=800, env=StubEnv())
        assert alice.on_outcome(msg.id, RESPONSE, None, now=900, env=StubEnv()) == []


class TestDefaultReactions:
    def test_adaptive_records_loss_and_severs_when_unprofitable(self):
        alice, msg = TestOutcomeDelivery().late_relay()
        alice.paid_upstream[msg.id] = 600
        actions = alice.on_channel_default("Bob", [msg.id], now=1600, env=StubEnv())
        assert alice.uncompensated_loss == 600
        assert any(isinstance(a, Sever) and a.other == "Bob" for a in actions)

    def test_adaptive_keeps_a_profitable_edge(self):
        alice, msg = TestOutcomeDelivery().late_relay()
        alice.paid_upstream[msg.id] = 3
        alice.note_profit(edge_key("Alice", "Bob"), 100, 50)
        actions = alice.on_channel_default("Bob", [msg.id], now=1600, env=StubEnv())
        assert not any(isinstance(a, Sever) for a in actions)

    def test_unrelated_default_is_ignored(self):
        alice, msg = TestOutcomeDelivery().late_relay()
        assert alice.on_channel_default("Carol", [msg.id], now=1600, env=StubEnv()) == []


class TestPolicyParsing:
    def test_simple_names(self):
        assert parse_policy(["break_immediately"]).kind == "break_immediately"
        assert parse_policy(["deadbeat"]).refuses_payment

    def test_wait_for_duration(self):
        policy = parse_policy(["wait_for:8900"])
        assert policy.kind == "wait_for" and policy.wait_ms == 8900

    def test_adaptive_window_and_threshold(self):
        policy = parse_policy(["adaptive:3600000:5"])
        assert policy.window_ms == 3_600_000 and policy.threshold == 5

    def test_reprice_bandwidth(self):
        policy = parse_policy(["wait_sync", "bandwidth=reprice:100:5:0"])
        assert policy.bandwidth == "reprice"
        assert policy.reprice_params == EdgeParams(100, 5, 0)

    def test_unknown_policy_rejected(self):
        with pytest.raises(NodeError):
            parse_policy(["weird"])
        with pytest.raises(NodeError):
            parse_policy(["wait_for"])
