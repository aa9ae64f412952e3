"""porsim: deterministic simulator for proof-of-response relay networks.

Staked nodes relay signed requests along priced, latency-promising edges;
every acknowledged request ends in exactly one of three outcomes (a
response, a proof of a severed edge, or streaming late payments), with
penalties adjudicated by a simulated orchestration contract.
"""

from .channel import ChannelState, Obligation
from .ledger import LedgerParams, LedgerState, SeveranceProof, SeveranceRecord
from .node import Message, NodeState, RelayPolicy, build_message
from .scenario import Scenario, parse_scenario, scenario_to_text
from .sim import (
    OUTCOME_DEFAULT,
    OUTCOME_PAID_LATENESS,
    OUTCOME_RESPONSE,
    OUTCOME_SEVERANCE_PROOF,
    RunResult,
    assert_trichotomy,
    run,
)
from .topology import (
    EdgeParams,
    Topology,
    center_chain_resistance_oracle,
    connected_components,
    is_isolated,
    majority_component,
    stake_weighted_center,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelState",
    "EdgeParams",
    "LedgerParams",
    "LedgerState",
    "Message",
    "NodeState",
    "Obligation",
    "OUTCOME_DEFAULT",
    "OUTCOME_PAID_LATENESS",
    "OUTCOME_RESPONSE",
    "OUTCOME_SEVERANCE_PROOF",
    "RelayPolicy",
    "RunResult",
    "Scenario",
    "SeveranceProof",
    "SeveranceRecord",
    "Topology",
    "assert_trichotomy",
    "build_message",
    "center_chain_resistance_oracle",
    "connected_components",
    "is_isolated",
    "majority_component",
    "parse_scenario",
    "run",
    "scenario_to_text",
    "stake_weighted_center",
]
