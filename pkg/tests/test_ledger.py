import pytest
from fractions import Fraction

from porsim.ledger import LedgerError, LedgerParams, LedgerState, SeveranceProof
from porsim.topology import EdgeParams, is_isolated


def fresh_ledger(penalty=10, frac=Fraction(0), delay=100, ledger_id="L0"):
    state = LedgerState(
        ledger_id=ledger_id,
        params=LedgerParams(
            severance_penalty=penalty,
            partition_slash_fraction=frac,
            chain_finality_delay_ms=delay,
        ),
    )
    for name in ["Alex", "Alice", "Bob", "Carol", "Dave", "Eve"]:
        state.register_node(name, 10)
    for a, b, ms in [
        ("Alex", "Alice", 100),
        ("Alice", "Bob", 200),
        ("Bob", "Carol", 100),
        ("Bob", "Eve", 100),
        ("Dave", "Eve", 100),
    ]:
        state.open_edge(a, b, EdgeParams(ms), now=0)
    return state


class TestOpenEdge:
    def test_open_adds_edge(self):
        state = LedgerState()
        state.register_node("A", 5)
        state.register_node("B", 5)
        state.open_edge("A", "B", EdgeParams(50), now=0)
        assert state.topology().has_edge("A", "B")

    def test_reopen_existing_edge_is_an_error(self):
        state = fresh_ledger()
        with pytest.raises(LedgerError):
            state.open_edge("Alex", "Alice", EdgeParams(50), now=0)

    def test_self_loop_and_unknown_node_rejected(self):
        state = fresh_ledger()
        with pytest.raises(LedgerError):
            state.open_edge("Alex", "Alex", EdgeParams(50), now=0)
        with pytest.raises(LedgerError):
            state.open_edge("Alex", "Zed", EdgeParams(50), now=0)

    def test_reprice_flow_reopens_with_higher_cost_after_finality(self):
        state = fresh_ledger(delay=100)
        proof = state.initiate_severance("Alex", "Alice", now=50)
        with pytest.raises(LedgerError):  # still present until finality
            state.open_edge("Alex", "Alice", EdgeParams(100, base_cost=5), now=60)
        state.finalize_severance(proof, now=150)
        state.open_edge("Alex", "Alice", EdgeParams(100, base_cost=5), now=150)
        assert state.edges[("Alex", "Alice")].base_cost == 5


class TestSeverance:
    def test_penalty_split_evenly(self):
        state = fresh_ledger(penalty=10)
        state.initiate_severance("Bob", "Eve", now=700)
        record = state.severance_log[0]
        assert record.fee_split == {"Bob": 5, "Eve": 5}
        assert state.stake_accounts["Bob"] == 5
        assert state.stake_accounts["Eve"] == 5
        assert state.penalty_pot == 10

    def test_odd_penalty_remainder_charged_to_initiator(self):
        state = fresh_ledger(penalty=11)
        state.initiate_severance("Bob", "Eve", now=0)
        assert state.severance_log[0].fee_split == {"Bob": 6, "Eve": 5}

    def test_zero_penalty(self):
        state = fresh_ledger(penalty=0)
        state.initiate_severance("Bob", "Eve", now=0)
        assert state.severance_log[0].fee_split == {"Bob": 0, "Eve": 0}
        assert state.penalty_pot == 0

    def test_nonexistent_edge_is_an_error(self):
        state = fresh_ledger()
        with pytest.raises(LedgerError):
            state.initiate_severance("Alex", "Carol", now=0)

    def test_double_severance_is_an_error(self):
        state = fresh_ledger()
        state.initiate_severance("Bob", "Eve", now=0)
        with pytest.raises(LedgerError):
            state.initiate_severance("Eve", "Bob", now=1)

    def test_mutation_visible_exactly_at_finalize_time(self):
        state = fresh_ledger(delay=100)
        proof = state.initiate_severance("Bob", "Eve", now=700)
        record = state.severance_log[proof.log_index]
        assert record.finalize_time == 800
        assert state.topology().has_edge("Bob", "Eve")  # pre-finality
        with pytest.raises(LedgerError):
            state.finalize_severance(proof, now=799)
        assert state.topology().has_edge("Bob", "Eve")
        state.finalize_severance(proof, now=800)
        assert not state.topology().has_edge("Bob", "Eve")


class TestProofVerification:
    def test_round_trip(self):
        state = fresh_ledger()
        proof = state.initiate_severance("Bob", "Eve", now=0)
        assert state.verify_severance_proof(proof)

    def test_tampered_edge_pair_fails(self):
        state = fresh_ledger()
        proof = state.initiate_severance("Bob", "Eve", now=0)
        forged = SeveranceProof(
            ledger_id=proof.ledger_id,
            log_index=proof.log_index,
            edge=("Alice", "Bob"),
            token=proof.token,
        )
        assert not state.verify_severance_proof(forged)

    def test_proof_from_another_ledger_fails(self):
        state_a = fresh_ledger(ledger_id="L-a")
        state_b = fresh_ledger(ledger_id="L-b")
        proof = state_a.initiate_severance("Bob", "Eve", now=0)
        assert not state_b.verify_severance_proof(proof)

    def test_verifiable_proofs_stay_verifiable(self):
        state = fresh_ledger()
        proof = state.initiate_severance("Bob", "Eve", now=0)
        state.finalize_severance(proof, now=100)
        state.initiate_severance("Dave", "Eve", now=200)
        state.open_edge("Alex", "Carol", EdgeParams(50), now=300)
        state.adjudicate_partition(now=400)
        assert state.verify_severance_proof(proof)


class TestIsolationReimbursement:
    def isolated_eve_ledger(self):
        state = fresh_ledger(penalty=10)
        for initiator, other, t in [("Bob", "Eve", 0), ("Dave", "Eve", 10)]:
            proof = state.initiate_severance(initiator, other, now=t)
            state.finalize_severance(proof, now=t + 100)
        return state

    def test_counterparty_halves_reimbursed(self):
        state = self.isolated_eve_ledger()
        assert is_isolated(state.topology(), "Eve")
        credits = state.report_isolation("Alex", "Eve", now=500)
        assert credits == {"Bob": 5, "Dave": 5}
        assert state.stake_accounts["Eve"] == 10 - 5 - 5 - 10  # halves + reimbursement
        assert state.stake_accounts["Bob"] == 10
        assert state.stake_accounts["Dave"] == 10

    def test_connected_node_rejected(self):
        state = fresh_ledger()
        with pytest.raises(LedgerError):
            state.report_isolation("Alex", "Carol", now=0)

    def test_isolated_without_history_debits_nothing(self):
        state = LedgerState()
        state.register_node("A", 10)
        state.register_node("B", 10)
        state.register_node("C", 30)
        state.open_edge("A", "C", EdgeParams(10), now=0)
        # B never had a severed edge; it is simply not connected
        credits = state.report_isolation("A", "B", now=0)
        assert credits == {}
        assert state.stake_accounts["B"] == 10

    def test_repeat_report_without_new_severances_debits_zero(self):
        state = self.isolated_eve_ledger()
        first = state.report_isolation("Alex", "Eve", now=500)
        assert sum(first.values()) == 10
        again = state.report_isolation("Alex", "Eve", now=600)
        assert again == {}
        assert state.stake_accounts["Eve"] == -10

    def test_severances_before_rejoin_are_out_of_scope(self):
        state = self.isolated_eve_ledger()
        state.note_rejoin("Eve", now=400)
        credits = state.report_isolation("Alex", "Eve", now=500)
        assert credits == {}


class TestPartitionAdjudication:
    def split_ledger(self, frac):
        state = LedgerState(params=LedgerParams(partition_slash_fraction=frac))
        state.register_node("A", 10)
        state.register_node("B", 10)
        state.register_node("C", 15)
        state.open_edge("A", "B", EdgeParams(10), now=0)
        return state

    def test_zero_fraction_changes_nothing(self):
        state = self.split_ledger(Fraction(0))
        slashed = state.adjudicate_partition(now=0)
        assert slashed == [("C", 0)]
        assert state.stake_accounts["C"] == 15

    def test_one_fifth_slashes_floor(self):
        state = self.split_ledger(Fraction(1, 5))
        slashed = state.adjudicate_partition(now=0)
        assert slashed == [("C", 3)]
        assert state.stake_accounts["C"] == 12
        assert state.penalty_pot == 3

    def test_connected_topology_is_a_noop(self):
        state = self.split_ledger(Fraction(1, 5))
        state.open_edge("A", "C", EdgeParams(10), now=0)
        assert state.adjudicate_partition(now=0) == []


class TestConservation:
    def test_total_constant_across_operation_sequence(self):
        state = fresh_ledger(penalty=7, frac=Fraction(1, 3))
        initial = state.conservation_total()
        proof = state.initiate_severance("Bob", "Eve", now=0)
        assert state.conservation_total() == initial
        state.finalize_severance(proof, now=100)
        proof2 = state.initiate_severance("Dave", "Eve", now=200)
        state.finalize_severance(proof2, now=300)
        assert state.conservation_total() == initial
        state.report_isolation("Alex", "Eve", now=400)
        assert state.conservation_total() == initial
        state.adjudicate_partition(now=500)
        assert state.conservation_total() == initial
