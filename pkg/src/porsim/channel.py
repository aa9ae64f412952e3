"""Bilateral state-channel accounting between edge endpoints.

Tracks in-flight message obligations, the per-millisecond late fees they
accrue past their deadline, and the periodic sync points where accrued fees
are actually paid (or refused, which is a default). The channel never talks
to the network; the simulator feeds it forwards, discharges and sync ticks.

Deadline convention: an obligation's ``due`` is the time its ower must *send*
the outcome upstream. Lateness accrues from ``due`` until discharge and the
unpaid remainder settles at the next sync.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .topology import NodeId

Ms = int
Money = int
MsgId = tuple[NodeId, int]

RESPONSE = "response"
SEVERANCE_PROOF = "severance-proof"
GAVE_UP_WITH_PAYMENT = "gave-up-with-payment"
_OUTCOME_KINDS = (RESPONSE, SEVERANCE_PROOF, GAVE_UP_WITH_PAYMENT)


class ChannelError(ValueError):
    pass


@dataclass
class Obligation:
    """One in-flight promise: ``ower`` owes the outcome for ``msg_id``."""

    msg_id: MsgId
    ower: NodeId
    due: Ms
    discharged_at: Ms | None = None
    outcome_kind: str | None = None
    paid: Money = 0
    delivered: bool = False
    closed: bool = False  # voided (e.g. the carrying edge was severed)

    def accrued(self, rate: int, now: Ms) -> Money:
        """Late fee accumulated by ``now`` (capped at the discharge time)."""
        end = now if self.discharged_at is None else min(now, self.discharged_at)
        return max(0, end - self.due) * rate


@dataclass
class ChannelState:
    """Off-chain account for one edge."""

    endpoints: tuple[NodeId, NodeId]
    late_rate: int = 1
    sync_interval_ms: Ms = 1000
    sync_phase_ms: Ms = 0
    balance_delta: Money = 0  # positive: endpoints[1] owes endpoints[0]
    next_sync_time: Ms = field(default=-1)
    obligations: dict[tuple[MsgId, NodeId], Obligation] = field(default_factory=dict)
    closed: bool = False

    def __post_init__(self) -> None:
        if self.sync_interval_ms < 1:
            raise ChannelError("sync interval must be >= 1 ms")
        a, b = self.endpoints
        if a == b:
            raise ChannelError("channel endpoints must differ")
        if self.next_sync_time < 0:
            self.next_sync_time = self.first_sync_time()

    def first_sync_time(self) -> Ms:
        return self.sync_phase_ms if self.sync_phase_ms > 0 else self.sync_interval_ms

    def next_sync_after(self, t: Ms) -> Ms:
        """First scheduled sync strictly after ``t``."""
        first = self.first_sync_time()
        if t < first:
            return first
        k = (t - first) // self.sync_interval_ms + 1
        return first + k * self.sync_interval_ms

    def other(self, node: NodeId) -> NodeId:
        a, b = self.endpoints
        if node == a:
            return b
        if node == b:
            return a
        raise ChannelError(f"{node} is not an endpoint of {a}-{b}")

    def _shift(self, toward: NodeId, amount: Money) -> None:
        if toward == self.endpoints[0]:
            self.balance_delta += amount
        else:
            self.balance_delta -= amount

    # -- obligations ---------------------------------------------------------

    def record_forward(
        self, msg_id: MsgId, ower: NodeId, due: Ms, prepaid: Money
    ) -> Obligation:
        """Register the obligation created by forwarding a message to ``ower``.

        ``due`` may already be in the past; lateness then accrues from it.
        The prepaid amount attached to the forward moves toward the ower in
        the running balance.
        """
        self.other(ower)  # endpoint check
        key = (msg_id, ower)
        if key in self.obligations:
            raise ChannelError(f"duplicate obligation for {msg_id} owed by {ower}")
        ob = Obligation(msg_id=msg_id, ower=ower, due=due)
        self.obligations[key] = ob
        self._shift(ower, prepaid)
        return ob

    def discharge(self, msg_id: MsgId, ower: NodeId, now: Ms, outcome_kind: str) -> Obligation:
        """Mark the outcome produced at ``now``; accrual stops here."""
        if outcome_kind not in _OUTCOME_KINDS:
            raise ChannelError(f"unknown outcome kind {outcome_kind!r}")
        ob = self.obligations.get((msg_id, ower))
        if ob is None:
            raise ChannelError(f"no obligation for {msg_id} owed by {ower}")
        if ob.discharged_at is not None:
            raise ChannelError(f"obligation for {msg_id} already discharged")
        ob.discharged_at = now
        ob.outcome_kind = outcome_kind
        return ob

    def close_obligation(self, msg_id: MsgId, ower: NodeId) -> None:
        ob = self.obligations.get((msg_id, ower))
        if ob is not None:
            ob.closed = True

    def obligations_owed_by(self, node: NodeId) -> list[Obligation]:
        return [ob for ob in self.obligations.values() if ob.ower == node]

    # -- money ---------------------------------------------------------------

    def lateness_owed(self, now: Ms, ower: NodeId | None = None) -> Money:
        """Accrued-but-unpaid late fees at ``now`` (optionally for one side)."""
        total = 0
        for ob in self.obligations.values():
            if ob.closed or (ower is not None and ob.ower != ower):
                continue
            total += max(0, ob.accrued(self.late_rate, now) - ob.paid)
        return total

    def settle_sync(
        self,
        now: Ms,
        funds: Mapping[NodeId, Money],
        refuse: Iterable[NodeId] = (),
    ) -> tuple[dict[NodeId, Money], set[NodeId]]:
        """Run the scheduled settlement at ``now``.

        Each side pays its accrued-but-unpaid lateness in full, or defaults
        when it refuses or lacks funds. Returns (payments, defaulted sides)
        and advances the schedule. Raises when called off-schedule.
        """
        if now != self.next_sync_time:
            raise ChannelError(
                f"sync at {now} but schedule says {self.next_sync_time}"
            )
        self.next_sync_time += self.sync_interval_ms
        refuse = set(refuse)
        payments: dict[NodeId, Money] = {}
        defaulted: set[NodeId] = set()
        for side in self.endpoints:
            owed = self.lateness_owed(now, side)
            if owed == 0:
                continue
            if side in refuse or funds.get(side, 0) < owed:
                defaulted.add(side)
                continue
            for ob in self.obligations.values():
                if ob.closed or ob.ower != side:
                    continue
                due_now = ob.accrued(self.late_rate, now) - ob.paid
                if due_now > 0:
                    ob.paid += due_now
            payments[side] = owed
            self._shift(self.other(side), owed)
        return payments, defaulted

    def fully_settled(self, ob: Obligation) -> bool:
        return ob.closed or (
            ob.discharged_at is not None
            and ob.delivered
            and ob.paid >= ob.accrued(self.late_rate, ob.discharged_at)
        )

    def active(self) -> bool:
        """Whether any obligation still needs settlement or delivery."""
        if self.closed:
            return False
        return any(not self.fully_settled(ob) for ob in self.obligations.values())
