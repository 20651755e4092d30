"""Proactive leader selection over lossy vehicle-to-vehicle broadcast.

The package splits into:

* `protocol`  -- the per-vehicle leader-selection state machine
* `channel`   -- Nakagami-m probabilistic broadcast medium
* `mobility`  -- signalized one-lane intersection traffic
* `engine`    -- deterministic time-stepped runs and a static-topology harness
* `metrics`   -- agreement/convergence metrics and campaign summaries
* `cli`       -- the batch campaign runner (`leadersim` console script)
"""

from .channel import ChannelConfig, Position, broadcast, packet_reception_rate
from .engine import Event, RunResult, SimConfig, Snapshot, inject_static_topology, run
from .metrics import SummaryStats, convergence_episodes, is_stable, summarize
from .mobility import Intersection, LightState, ScenarioConfig, VehicleState
from .protocol import (
    LeaderInfo,
    LeaderMessage,
    NodeState,
    OrderSpec,
    ProtocolConfig,
    compare,
    default_order,
    new_node,
    note_neighbor,
    on_receive,
    tick,
)

__all__ = [
    "ChannelConfig",
    "Position",
    "broadcast",
    "packet_reception_rate",
    "Event",
    "RunResult",
    "SimConfig",
    "Snapshot",
    "inject_static_topology",
    "run",
    "SummaryStats",
    "convergence_episodes",
    "is_stable",
    "summarize",
    "Intersection",
    "LightState",
    "ScenarioConfig",
    "VehicleState",
    "LeaderInfo",
    "LeaderMessage",
    "NodeState",
    "OrderSpec",
    "ProtocolConfig",
    "compare",
    "default_order",
    "new_node",
    "note_neighbor",
    "on_receive",
    "tick",
]

__version__ = "0.1.0"
