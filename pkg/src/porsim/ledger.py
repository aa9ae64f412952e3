"""Simulated orchestration contract.

Holds stake accounts, mutates the shared topology (edge open / severance with
a finality delay), charges severance penalties, and adjudicates partitions and
isolation reimbursements. Everything is integer arithmetic on a single-writer
state machine; the simulator's event loop owns all mutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .topology import (
    EdgeParams,
    NodeId,
    Topology,
    edge_key,
    is_isolated,
    majority_component,
)

Ms = int
Money = int


class LedgerError(ValueError):
    pass


@dataclass
class LedgerParams:
    severance_penalty: Money = 10
    partition_slash_fraction: Fraction = Fraction(0)
    chain_finality_delay_ms: Ms = 100

    def validate(self) -> None:
        if not (0 <= self.partition_slash_fraction <= 1):
            raise LedgerError("partition_slash_fraction must lie in [0, 1]")
        if self.severance_penalty < 0:
            raise LedgerError("severance_penalty must be >= 0")
        if self.chain_finality_delay_ms < 0:
            raise LedgerError("chain_finality_delay_ms must be >= 0")


@dataclass
class SeveranceRecord:
    edge: tuple[NodeId, NodeId]
    initiator: NodeId
    submit_time: Ms
    finalize_time: Ms
    fee_split: dict[NodeId, Money]
    reimbursed: bool = False


@dataclass(frozen=True)
class SeveranceProof:
    """Pointer into a ledger's severance log, tagged so tampering is evident."""

    ledger_id: str
    log_index: int
    edge: tuple[NodeId, NodeId]
    token: str

    @staticmethod
    def make_token(ledger_id: str, log_index: int, edge: tuple[NodeId, NodeId]) -> str:
        return f"sev:{ledger_id}:{log_index}:{edge[0]}-{edge[1]}"


class LedgerState:
    """On-chain state: stakes, edges, severance log, penalty pot."""

    def __init__(self, ledger_id: str = "L0", params: LedgerParams | None = None):
        self.ledger_id = ledger_id
        self.params = params or LedgerParams()
        self.params.validate()
        self.stake_accounts: dict[NodeId, Money] = {}
        self.edges: dict[tuple[NodeId, NodeId], EdgeParams] = {}
        self.severance_log: list[SeveranceRecord] = []
        # edge key -> log index of the not-yet-finalized severance
        self.pending_severance: dict[tuple[NodeId, NodeId], int] = {}
        self.rejoin_time: dict[NodeId, Ms] = {}
        self.penalty_pot: Money = 0

    # -- registration ------------------------------------------------------

    def register_node(self, node: NodeId, stake: Money, now: Ms = 0) -> None:
        if node in self.stake_accounts:
            raise LedgerError(f"node {node} already registered")
        if stake < 0:
            raise LedgerError("stake must be >= 0")
        self.stake_accounts[node] = stake
        self.rejoin_time[node] = now

    def note_rejoin(self, node: NodeId, now: Ms) -> None:
        """A node pinged the contract after downtime; reset its penalty epoch."""
        if node not in self.stake_accounts:
            raise LedgerError(f"unknown node {node}")
        self.rejoin_time[node] = now

    # -- views ---------------------------------------------------------------

    def topology(self, *, drop_pending: bool = False) -> Topology:
        """Current topology; optionally treat submitted severances as done."""
        topo = Topology(dict(self.stake_accounts), {})
        for key, params in self.edges.items():
            if drop_pending and key in self.pending_severance:
                continue
            topo.edges[key] = params
        return topo

    def conservation_total(self) -> Money:
        return sum(self.stake_accounts.values()) + self.penalty_pot

    # -- operations ----------------------------------------------------------

    def open_edge(self, a: NodeId, b: NodeId, params: EdgeParams, now: Ms) -> None:
        if a == b:
            raise LedgerError("cannot open a self-loop edge")
        for v in (a, b):
            if v not in self.stake_accounts:
                raise LedgerError(f"unknown node {v}")
        key = edge_key(a, b)
        if key in self.edges:
            raise LedgerError(f"edge {a}-{b} already open")
        params.validate()
        self.edges[key] = params

    def initiate_severance(
        self, initiator: NodeId, other: NodeId, now: Ms
    ) -> SeveranceProof:
        """Submit the on-chain break; returns the immediately shareable proof.

        The edge leaves the topology at now + chain_finality_delay_ms (the
        caller schedules :meth:`finalize_severance`); both endpoints are
        charged half the penalty at submission, odd unit on the initiator.
        """
        key = edge_key(initiator, other)
        if key not in self.edges:
            raise LedgerError(f"edge {initiator}-{other} does not exist")
        if key in self.pending_severance:
            raise LedgerError(f"edge {initiator}-{other} already being severed")
        penalty = self.params.severance_penalty
        half = penalty // 2
        split = {initiator: penalty - half, other: half}
        for node, amount in split.items():
            self.stake_accounts[node] -= amount
            self.penalty_pot += amount
        record = SeveranceRecord(
            edge=key,
            initiator=initiator,
            submit_time=now,
            finalize_time=now + self.params.chain_finality_delay_ms,
            fee_split=split,
        )
        index = len(self.severance_log)
        self.severance_log.append(record)
        self.pending_severance[key] = index
        return SeveranceProof(
            ledger_id=self.ledger_id,
            log_index=index,
            edge=key,
            token=SeveranceProof.make_token(self.ledger_id, index, key),
        )

    def finalize_severance(self, proof: SeveranceProof, now: Ms) -> None:
        """Apply the topology mutation; call exactly at the record's finalize time."""
        record = self.severance_log[proof.log_index]
        if now < record.finalize_time:
            raise LedgerError("severance not yet final")
        self.pending_severance.pop(record.edge, None)
        self.edges.pop(record.edge, None)

    def verify_severance_proof(self, proof: SeveranceProof) -> bool:
        if proof.ledger_id != self.ledger_id:
            return False
        if not (0 <= proof.log_index < len(self.severance_log)):
            return False
        record = self.severance_log[proof.log_index]
        if record.edge != proof.edge:
            return False
        return proof.token == SeveranceProof.make_token(
            self.ledger_id, proof.log_index, proof.edge
        )

    def report_isolation(
        self, reporter: NodeId, isolated: NodeId, now: Ms
    ) -> dict[NodeId, Money]:
        """Reimburse counterparties' severance halves out of the isolated stake.

        Covers severances involving the node since its last (re)registration
        that were not already reimbursed; returns the credit map.
        """
        if isolated not in self.stake_accounts:
            raise LedgerError(f"unknown node {isolated}")
        if not is_isolated(self.topology(), isolated):
            raise LedgerError(f"{isolated} is not isolated")
        epoch = self.rejoin_time.get(isolated, 0)
        credits: dict[NodeId, Money] = {}
        for record in self.severance_log:
            if record.reimbursed or record.submit_time < epoch:
                continue
            if isolated not in record.edge:
                continue
            counterparty = record.edge[0] if record.edge[1] == isolated else record.edge[1]
            paid = record.fee_split.get(counterparty, 0)
            if paid:
                credits[counterparty] = credits.get(counterparty, 0) + paid
            record.reimbursed = True
        total = sum(credits.values())
        self.stake_accounts[isolated] -= total
        for node, amount in credits.items():
            self.stake_accounts[node] += amount
        return credits

    def adjudicate_partition(self, now: Ms) -> list[tuple[NodeId, Money]]:
        """Slash every node outside the majority component.

        Returns the (node, amount) list; empty when the topology is still
        connected (the no-op case).
        """
        topo = self.topology()
        if not topo.nodes:
            raise LedgerError("empty topology")
        major = majority_component(topo)
        frac = self.params.partition_slash_fraction
        slashed = []
        for node in sorted(topo.nodes):
            if node in major:
                continue
            stake = self.stake_accounts[node]
            # debt (negative balance) is not slashable
            amount = (stake * frac.numerator) // frac.denominator if stake > 0 else 0
            self.stake_accounts[node] -= amount
            self.penalty_pot += amount
            slashed.append((node, amount))
        return slashed
