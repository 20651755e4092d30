"""Deterministic time-stepped orchestration of mobility, protocol and channel.

`run` executes the full intersection scenario; `inject_static_topology`
drives the same protocol machinery over frozen positions, which is what the
convergence and persistence oracles use. Both produce a RunResult holding
per-step agreement snapshots, an optional event log and message counters.

Determinism contract: all randomness comes from three substreams (spawn,
channel, phase) derived from the run seed, consumed in a fixed order, so
equal seed and config give bit-identical results.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from . import mobility, protocol
from .channel import ChannelConfig, Position
from .mobility import Intersection, ScenarioConfig
from .protocol import (
    BASIC,
    OPTIMIZED,
    TIME_EPS,
    LeaderInfo,
    LeaderMessage,
    NodeState,
    ProtocolConfig,
)

EVENT_KINDS = (
    "spawn",
    "despawn",
    "tx_leader_msg",
    "rx_leader_msg",
    "adopt",
    "self_promote",
    "mode_change",
    "cross",
)


@dataclass(slots=True)
class Event:
    t: float
    kind: str
    subject: int
    detail: dict


@dataclass(slots=True)
class Snapshot:
    """Agreement state after one step: (vehicle id, believed leader id,
    is_self_leader) for every participating vehicle."""

    t: float
    participants: list[tuple[int, int, bool]]


@dataclass
class RunResult:
    snapshots: list[Snapshot]
    events: list[Event]
    leader_msg_count: int
    bsm_count: int
    seed: int
    variant: str
    volume: str


@dataclass
class SimConfig:
    duration: float = 180.0
    seed: int = 0
    variant: str = BASIC
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    bsm_period: float = 0.1
    participation_radius: float = 70.0
    order_granularity: float = 2.0  # distance band of the ranking, 0 = exact
    record_events: bool = True
    volume_label: str = "custom"

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.bsm_period <= 0:
            raise ValueError("bsm_period must be > 0")
        if self.participation_radius <= 0:
            raise ValueError("participation_radius must be > 0")
        if self.order_granularity < 0:
            raise ValueError("order_granularity must be >= 0")
        if self.variant not in protocol.VARIANTS:
            raise ValueError(f"variant must be one of {protocol.VARIANTS}")
        if self.protocol.variant != self.variant:
            self.protocol = replace(self.protocol, variant=self.variant)


def _streams(seed: int) -> tuple[random.Random, random.Random, random.Random]:
    # Fixed substream assignment; string seeding is stable across runs.
    return (
        random.Random(f"{seed}:spawn"),
        random.Random(f"{seed}:channel"),
        random.Random(f"{seed}:phase"),
    )


class _Node:
    __slots__ = ("state", "next_tick", "next_bsm", "pos", "dist", "in_radius", "last_s")

    def __init__(self, state: NodeState, next_tick: float, next_bsm: float,
                 pos: Position, dist: float):
        self.state = state
        self.next_tick = next_tick
        self.next_bsm = next_bsm
        self.pos = pos
        self.dist = dist
        self.in_radius = True
        self.last_s = -1.0


class _World:
    """Protocol-side bookkeeping shared by the two harnesses."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.order = protocol.coarse_order(cfg.order_granularity)
        self.nodes: dict[int, _Node] = {}
        self.events: list[Event] = []
        self.leader_msg_count = 0
        self.bsm_count = 0
        self.snapshots: list[Snapshot] = []
        self._rx_table: list[tuple[int, float, float, _Node]] = []

    def emit(self, t: float, kind: str, subject: int, detail: dict) -> None:
        if self.cfg.record_events:
            self.events.append(Event(t=t, kind=kind, subject=subject, detail=detail))

    def add_node(self, vid: int, pos: Position, dist: float, now: float,
                 claim: bool, rng_phase: random.Random) -> _Node:
        info = LeaderInfo(id=vid, position=pos, dist_to_intersection=dist)
        state = protocol.new_node(vid, info, now, self.cfg.protocol, claim=claim)
        node = _Node(
            state=state,
            next_tick=now + rng_phase.random() * self.cfg.protocol.t_p,
            next_bsm=now + rng_phase.random() * self.cfg.bsm_period,
            pos=pos,
            dist=dist,
        )
        self.nodes[vid] = node
        return node

    def begin_step(self) -> None:
        """Cache the receiver table for this step (ascending id)."""
        self._rx_table = [
            (vid, n.pos.x, n.pos.y, n) for vid, n in sorted(self.nodes.items())
        ]

    def _fast_broadcast(
        self, sender: int, sx: float, sy: float, rng: random.Random
    ) -> list[tuple[int, _Node]]:
        """One broadcast over the cached table.

        Same contract as channel.broadcast: receivers in ascending id order,
        one rng draw per in-range receiver, none beyond max_range.
        """
        ch = self.cfg.channel
        m, cr, max_range = ch.m, ch.cr, ch.max_range
        reliable = ch.reliable
        rand = rng.random
        exp = math.exp
        hyp = math.hypot
        out = []
        for vid, x, y, node in self._rx_table:
            if vid == sender:
                continue
            d = hyp(x - sx, y - sy)
            if d > max_range:
                continue
            if reliable:
                p = 1.0
            else:
                xx = m * d / cr
                s = 1.0
                if m >= 2:
                    s += xx
                    if m >= 3:
                        s += 0.5 * xx * xx
                p = exp(-xx) * s
            if rand() < p:
                out.append((vid, node))
        return out

    def do_bsms(self, t: float, rng_channel: random.Random) -> None:
        """Background beacons for neighbor sensing.

        BSM transmissions are always counted, but their losses only matter
        through neighbor tables, which the basic variant never reads; the
        delivery simulation is skipped there.
        """
        simulate = self.cfg.protocol.variant == OPTIMIZED
        bsm_period = self.cfg.bsm_period
        for vid, sx, sy, node in self._rx_table:
            if node.next_bsm > t + TIME_EPS:
                continue
            while node.next_bsm <= t + TIME_EPS:
                node.next_bsm += bsm_period
            if not node.in_radius:
                continue
            self.bsm_count += 1
            if simulate:
                for rid, rnode in self._fast_broadcast(vid, sx, sy, rng_channel):
                    rnode.state.neighbor_table[vid] = t

    def do_ticks(self, t: float, rng_channel: random.Random) -> None:
        """Run every due protocol tick, then deliver what was transmitted.

        All deliveries land after the last tick of the step, so messages
        sent in a step are processed at the receivers' next tick.
        """
        due = [
            (node.next_tick, vid)
            for vid, node in self.nodes.items()
            if node.next_tick <= t + TIME_EPS
        ]
        due.sort()
        deliveries: list[tuple[_Node, LeaderMessage]] = []
        record = self.cfg.record_events
        for _, vid in due:
            node = self.nodes[vid]
            state = node.state
            before = (state.believed_leader.id, state.is_self_leader, state.mode)
            while node.next_tick <= t + TIME_EPS:
                msgs = protocol.tick(state, t, self.order, self.cfg.protocol)
                node.next_tick += protocol.period(state, self.cfg.protocol)
                if msgs and node.in_radius:
                    for msg in msgs:
                        self.leader_msg_count += 1
                        if record:
                            self.emit(t, "tx_leader_msg", vid, _msg_detail(msg))
                        for rid, rnode in self._fast_broadcast(
                            vid, node.pos.x, node.pos.y, rng_channel
                        ):
                            deliveries.append((rnode, msg))
            after = (state.believed_leader.id, state.is_self_leader, state.mode)
            if after != before:
                if after[0] != before[0] and not after[1]:
                    self.emit(t, "adopt", vid, {"leader": after[0]})
                if after[1] and not before[1]:
                    self.emit(t, "self_promote", vid, {})
                if after[2] != before[2]:
                    self.emit(t, "mode_change", vid, {"mode": after[2]})
        for rnode, msg in deliveries:
            protocol.on_receive(rnode.state, msg, t)
            if record:
                self.emit(
                    t, "rx_leader_msg", rnode.state.self_id,
                    {"leader": msg.leader, "seq": msg.seq, "relayer": msg.relayer},
                )

    def take_snapshot(self, t: float) -> None:
        participants = [
            (vid, node.state.believed_leader.id, node.state.is_self_leader)
            for vid, node in sorted(self.nodes.items())
            if node.in_radius
        ]
        self.snapshots.append(Snapshot(t=t, participants=participants))

    def result(self, seed: int) -> RunResult:
        return RunResult(
            snapshots=self.snapshots,
            events=self.events,
            leader_msg_count=self.leader_msg_count,
            bsm_count=self.bsm_count,
            seed=seed,
            variant=self.cfg.variant,
            volume=self.cfg.volume_label,
        )


def _msg_detail(msg: LeaderMessage) -> dict:
    return {
        "leader": msg.leader,
        "seq": msg.seq,
        "relayer": msg.relayer,
        "neighbors": sorted(msg.neighbors) if msg.neighbors is not None else None,
        "info": {
            "id": msg.info.id,
            "x": msg.info.position.x,
            "y": msg.info.position.y,
            "dist": msg.info.dist_to_intersection,
        },
    }


def run(cfg: SimConfig) -> RunResult:
    """Execute one full intersection run.

    Per step: mobility spawn and advance; vehicles that cross the stop
    line immediately leave the protocol group; background BSMs refresh
    neighbor tables; due protocol ticks transmit through the channel;
    deliveries are buffered at the receivers; one snapshot is recorded.
    """
    world = _World(cfg)
    rng_spawn, rng_channel, rng_phase = _streams(cfg.seed)
    intersection = Intersection(cfg=cfg.scenario)
    steps = math.ceil(cfg.duration / cfg.scenario.dt - TIME_EPS)
    radius = cfg.participation_radius

    for k in range(steps):
        t = k * cfg.scenario.dt

        spawned = intersection.spawn(rng_spawn, t)
        removed = intersection.step(cfg.scenario.dt)

        for v in spawned:
            pos = mobility.position_of(v, cfg.scenario)
            dist = mobility.dist_to_center(v, cfg.scenario)
            # Vehicles join an ongoing group: listen before claiming.
            world.add_node(v.id, pos, dist, t, claim=False, rng_phase=rng_phase)
            world.emit(t, "spawn", v.id, {"approach": v.approach})
        for v in removed:
            world.emit(t, "despawn", v.id, {})

        for v in intersection.vehicles:
            node = world.nodes.get(v.id)
            if node is None:
                continue
            if v.crossed:
                # Crossing the stop line ends participation on the spot.
                world.emit(t, "cross", v.id, {})
                del world.nodes[v.id]
                continue
            if v.s != node.last_s:
                node.last_s = v.s
                pos = mobility.position_of(v, cfg.scenario)
                node.pos = pos
                node.dist = mobility.dist_to_center(v, cfg.scenario)
                protocol.update_position(
                    node.state,
                    LeaderInfo(id=v.id, position=pos, dist_to_intersection=node.dist),
                )
                node.in_radius = node.dist <= radius

        world.begin_step()
        world.do_bsms(t, rng_channel)
        world.do_ticks(t, rng_channel)
        world.take_snapshot(t)

    return world.result(cfg.seed)


def inject_static_topology(
    nodes: list[tuple[int, Position]],
    cfg: SimConfig,
    arrivals: list[tuple[float, int, Position]] = (),
) -> RunResult:
    """Run the protocol over frozen positions, no mobility.

    Nodes given up front all start at t=0 claiming leadership, which is the
    cold-start case the convergence oracle checks. `arrivals` inject extra
    nodes mid-run (at the first step at or after their time); they join
    listening, like spawned vehicles do. Distance to the origin serves as
    the rank input for the default order. The participation radius does not
    apply: every node senses, sends and counts.

    Raises ValueError on duplicate ids.
    """
    ids = [vid for vid, _ in nodes] + [vid for _, vid, _ in arrivals]
    if len(ids) != len(set(ids)):
        raise ValueError("duplicate vehicle ids in static topology")

    world = _World(cfg)
    _, rng_channel, rng_phase = _streams(cfg.seed)

    for vid, pos in nodes:
        world.add_node(vid, pos, math.hypot(pos.x, pos.y), 0.0, claim=True,
                       rng_phase=rng_phase)
        world.emit(0.0, "spawn", vid, {})

    pending = sorted(arrivals, key=lambda a: (a[0], a[1]))
    dt = cfg.scenario.dt
    steps = math.ceil(cfg.duration / dt - TIME_EPS)
    for k in range(steps):
        t = k * dt
        while pending and pending[0][0] <= t + TIME_EPS:
            _, vid, pos = pending.pop(0)
            world.add_node(vid, pos, math.hypot(pos.x, pos.y), t, claim=False,
                           rng_phase=rng_phase)
            world.emit(t, "spawn", vid, {})
        world.begin_step()
        world.do_bsms(t, rng_channel)
        world.do_ticks(t, rng_channel)
        world.take_snapshot(t)

    return world.result(cfg.seed)
