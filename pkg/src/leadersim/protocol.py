"""Per-vehicle proactive leader selection state machine.

One message type drives everything: a *leader message* naming the current
leader, carrying a per-origin sequence number and the leader's position
info. Only a vehicle that believes itself leader originates new sequence
numbers; everyone else relays. The periodic stream of leader messages
doubles as the leader's heartbeat: a vehicle that hears nothing from its
believed leader for `t_silence` promotes itself and starts originating.

Two variants share this machine:

* basic      -- originate at the fast period, relay every new heartbeat.
* optimized  -- attach neighbor lists to messages and skip relays whose
                coverage would be redundant; the leader drops to a slower
                origination period once no conflicting claims have been
                heard for `consensus_quiet` seconds.

All operations mutate the passed NodeState in place and are meant to be
called sequentially by a single harness; independent nodes are fully
isolated and safe to run in parallel worlds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .channel import Position

# Guard band for strict wall-clock comparisons: tick times are sums of float
# periods, so exact-boundary checks would otherwise flip on 1-ulp drift.
TIME_EPS = 1e-9

FAST = "fast"
SLOW = "slow"
BASIC = "basic"
OPTIMIZED = "optimized"
VARIANTS = (BASIC, OPTIMIZED)


@dataclass(frozen=True, slots=True)
class LeaderInfo:
    """What a leader message says about the leader vehicle itself."""

    id: int
    position: Position
    dist_to_intersection: float

    def __post_init__(self):
        if self.dist_to_intersection < 0 or not math.isfinite(self.dist_to_intersection):
            raise ValueError(
                f"dist_to_intersection must be finite and >= 0, "
                f"got {self.dist_to_intersection}"
            )


@dataclass(frozen=True, slots=True)
class LeaderMessage:
    """The single wire message.

    `leader`/`seq` identify the origination (seq is monotone per origin);
    `relayer` is whoever transmitted this particular copy. `neighbors` is
    the relayer's neighbor list and is only present in the optimized
    variant.
    """

    leader: int
    seq: int
    info: LeaderInfo
    relayer: int
    neighbors: Optional[frozenset[int]] = None


@dataclass(frozen=True)
class OrderSpec:
    """Strict total order over leader candidates.

    `better(a, b)` is True iff a strictly beats b: irreflexive, asymmetric,
    transitive, and total whenever ids differ.
    """

    better: Callable[[LeaderInfo, LeaderInfo], bool]


def _closest_wins(a: LeaderInfo, b: LeaderInfo) -> bool:
    if a.dist_to_intersection != b.dist_to_intersection:
        return a.dist_to_intersection < b.dist_to_intersection
    return a.id < b.id


def default_order() -> OrderSpec:
    """Nearest to the intersection wins; the smaller id breaks exact ties."""
    return OrderSpec(better=_closest_wins)


def coarse_order(granularity: float = 10.0) -> OrderSpec:
    """Distance order with a coarse granularity; id decides within a band.

    Positions move and reported ones lag reality, so two vehicles closing on
    the intersection neck-and-neck would keep out-ranking each other's
    slightly stale claims under the exact order. Banding the distance makes
    the ranking insensitive to sub-band jitter: contests inside one band
    settle immediately and deterministically on the id. granularity=0 gives
    the exact order.
    """
    if granularity <= 0:
        return default_order()

    def better(a: LeaderInfo, b: LeaderInfo) -> bool:
        ba = int(a.dist_to_intersection / granularity)
        bb = int(b.dist_to_intersection / granularity)
        if ba != bb:
            return ba < bb
        return a.id < b.id

    return OrderSpec(better=better)


def compare(order: OrderSpec, a: LeaderInfo, b: LeaderInfo) -> bool:
    """True iff a is strictly better than b under the given order."""
    return order.better(a, b)


@dataclass
class ProtocolConfig:
    t_p: float = 0.1  # fast origination/tick period, seconds
    t_p_slow: float = 0.125  # leader origination period after consensus
    t_silence: float = 0.5  # heartbeat timeout
    consensus_quiet: float = 1.0  # conflict-free time before slowing down
    variant: str = BASIC
    allow_slow: bool = True  # cleared when the payload needs a fast refresh

    def __post_init__(self):
        if not (0 < self.t_p <= self.t_p_slow):
            raise ValueError(
                f"need 0 < t_p <= t_p_slow, got t_p={self.t_p} t_p_slow={self.t_p_slow}"
            )
        if self.t_silence <= self.t_p:
            raise ValueError(
                f"need t_silence > t_p, got t_silence={self.t_silence} t_p={self.t_p}"
            )
        if self.consensus_quiet < self.t_p:
            raise ValueError(
                f"need consensus_quiet >= t_p, got {self.consensus_quiet}"
            )
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


@dataclass(slots=True)
class NodeState:
    """Everything one vehicle remembers between ticks."""

    self_id: int
    info: LeaderInfo  # own current info, kept fresh by the harness
    believed_leader: LeaderInfo
    is_self_leader: bool
    provisional: bool  # self-claim held silent until silence confirms no incumbent
    last_heartbeat: float
    last_conflict: float
    believed_seq: int = 0  # highest seq adopted from the believed leader
    seq_counter: int = 0
    mode: str = FAST
    dedup: set[tuple[int, int]] = field(default_factory=set)  # (leader, seq) relayed
    rx_buffer: list[LeaderMessage] = field(default_factory=list)
    neighbor_table: dict[int, float] = field(default_factory=dict)  # id -> last heard


def new_node(
    self_id: int,
    info: LeaderInfo,
    now: float,
    cfg: ProtocolConfig,
    claim: bool = True,
) -> NodeState:
    """Create a node that initially considers itself leader.

    With claim=True (a group starting from scratch) the node originates at
    its very first tick. With claim=False (a vehicle joining mid-run) the
    self-claim stays provisional: the node listens, adopts the first leader
    it hears regardless of rank, and only starts originating if nothing is
    heard for t_silence. Joining quietly is what keeps an incumbent leader
    in place when a better-ranked vehicle arrives.
    """
    if info.id != self_id:
        raise ValueError(f"info.id ({info.id}) must equal self_id ({self_id})")
    return NodeState(
        self_id=self_id,
        info=info,
        believed_leader=info,
        is_self_leader=True,
        provisional=not claim,
        last_heartbeat=now,
        last_conflict=now,
    )


def update_position(state: NodeState, info: LeaderInfo) -> None:
    """Refresh the node's own info (and its self-belief, if leader)."""
    if info.id != state.self_id:
        raise ValueError(f"info.id ({info.id}) must equal self_id ({state.self_id})")
    state.info = info
    if state.is_self_leader:
        state.believed_leader = info


def note_neighbor(state: NodeState, vid: int, now: float) -> None:
    """Record a neighbor sensed from any received transmission (e.g. a BSM)."""
    if vid != state.self_id:
        state.neighbor_table[vid] = now


def on_receive(state: NodeState, msg: LeaderMessage, now: float) -> None:
    """Handle one delivered leader message (possibly a duplicate).

    A copy naming the node's believed leader refreshes the heartbeat even
    when the (leader, seq) pair was already relayed and is therefore not
    buffered again. The relayer is always sensed as a neighbor.
    """
    if msg.leader == state.believed_leader.id:
        state.last_heartbeat = now
    note_neighbor(state, msg.relayer, now)
    if (msg.leader, msg.seq) not in state.dedup:
        state.rx_buffer.append(msg)


def _live_neighbors(state: NodeState, now: float, cfg: ProtocolConfig) -> frozenset[int]:
    horizon = now - cfg.t_silence
    return frozenset(v for v, t in state.neighbor_table.items() if t >= horizon)


def _relay_covered(
    state: NodeState, leader: int, live: frozenset[int], cfg: ProtocolConfig
) -> bool:
    """Optimized-variant suppression: is every live neighbor already reached?

    A neighbor counts as reached if it appears in the neighbor list of any
    buffered copy carrying the adopted leader, or if it transmitted such a
    copy itself (senders trivially have the message).
    """
    covered: set[int] = set()
    for m in state.rx_buffer:
        if m.leader != leader:
            continue
        covered.add(m.relayer)
        covered.add(m.leader)
        if m.neighbors:
            covered.update(m.neighbors)
    return live <= covered


def tick(
    state: NodeState,
    now: float,
    order: OrderSpec,
    cfg: ProtocolConfig,
) -> list[LeaderMessage]:
    """Run one protocol period; returns the messages to transmit.

    Called once per period (t_p in fast mode, t_p_slow in slow mode), each
    node on its own phase. In order:

    1. Scan the receive buffer. The best candidate message is the top one
       under the order function, newest sequence number first within one
       origin. Adopt it if the node is still listening (provisional), if
       its leader outranks the current belief, or if it is a fresh
       heartbeat (new seq) from the already-believed leader; adoption
       relays that copy once, unless the optimized coverage rule proves
       the relay redundant.
    2. If nothing was heard from the believed leader for t_silence, a
       non-leader resets: it assigns itself as leader (the only
       self-promotion path) and re-enters fast mode.
    3. A self-leader whose claim is active originates the next sequence
       number; in the optimized variant it attaches its live neighbor
       list and drops to the slow period once no conflicting claim has
       been buffered for consensus_quiet.
    4. The receive buffer is cleared.
    """
    out: list[LeaderMessage] = []

    if state.rx_buffer:
        best: Optional[LeaderMessage] = None
        for m in state.rx_buffer:
            if m.leader == state.self_id:
                # Echo of an own origination bouncing back; never a candidate.
                continue
            if state.is_self_leader:
                state.last_conflict = now
            if best is None:
                best = m
            elif m.leader == best.leader:
                if m.seq > best.seq:
                    best = m
            elif order.better(m.info, best.info):
                best = m

        if best is not None:
            adopt = state.provisional or order.better(best.info, state.believed_leader)
            if (
                not adopt
                and not state.is_self_leader
                and best.leader == state.believed_leader.id
                and best.seq > state.believed_seq
            ):
                adopt = True  # heartbeat refresh from the current leader
            if adopt:
                # Suppression only ever mutes heartbeat refreshes; a change
                # of leader is selection traffic and always propagates.
                heartbeat_only = (
                    not state.is_self_leader
                    and best.leader == state.believed_leader.id
                )
                state.believed_leader = best.info
                state.believed_seq = best.seq
                state.is_self_leader = False
                state.provisional = False
                state.last_heartbeat = now
                state.mode = FAST
                key = (best.leader, best.seq)
                if key not in state.dedup:
                    state.dedup.add(key)
                    suppress = False
                    if cfg.variant == OPTIMIZED and heartbeat_only:
                        live = _live_neighbors(state, now, cfg)
                        suppress = _relay_covered(state, best.leader, live, cfg)
                    if not suppress:
                        neighbors = None
                        if cfg.variant == OPTIMIZED:
                            neighbors = _live_neighbors(state, now, cfg)
                        out.append(
                            LeaderMessage(
                                leader=best.leader,
                                seq=best.seq,
                                info=best.info,
                                relayer=state.self_id,
                                neighbors=neighbors,
                            )
                        )

    if not state.is_self_leader and (now - state.last_heartbeat) > cfg.t_silence + TIME_EPS:
        # Heartbeat lost: reset leader status to self and contend again.
        state.believed_leader = state.info
        state.believed_seq = 0
        state.is_self_leader = True
        state.provisional = False
        state.mode = FAST
        state.last_conflict = now

    if state.is_self_leader:
        if state.provisional and (now - state.last_heartbeat) > cfg.t_silence + TIME_EPS:
            state.provisional = False  # heard nobody; the claim goes live
        if not state.provisional:
            state.seq_counter += 1
            neighbors = None
            if cfg.variant == OPTIMIZED:
                neighbors = _live_neighbors(state, now, cfg)
            out.append(
                LeaderMessage(
                    leader=state.self_id,
                    seq=state.seq_counter,
                    info=state.info,
                    relayer=state.self_id,
                    neighbors=neighbors,
                )
            )
            if (
                cfg.variant == OPTIMIZED
                and cfg.allow_slow
                and (now - state.last_conflict) > cfg.consensus_quiet + TIME_EPS
            ):
                state.mode = SLOW
            else:
                state.mode = FAST

    state.rx_buffer.clear()
    return out


def period(state: NodeState, cfg: ProtocolConfig) -> float:
    """Current tick period implied by the node's mode."""
    return cfg.t_p if state.mode == FAST else cfg.t_p_slow
