"""Microscopic traffic for a one-lane, four-approach signalized intersection.

Vehicles arrive on each approach by a Poisson process, drive a straight
approach toward the stop line, queue behind each other with a minimum gap,
cross on green and are removed a fixed distance past the line. Kinematics
are deliberately crude (instant stop/start at a constant cruise speed):
what matters downstream is who is where, not how smoothly they got there.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .channel import Position

APPROACHES = ("N", "E", "S", "W")
NS_GREEN = "NS_green"
EW_GREEN = "EW_green"


@dataclass(frozen=True)
class ScenarioConfig:
    approach_length: float = 100.0  # spawn point to stop line, meters
    speed: float = 10.0  # cruise speed, m/s
    min_gap: float = 7.0  # bumper spacing held within an approach
    arrival_rate: float = 0.05  # vehicles per second per approach
    green_time: float = 45.0  # NS green duration per cycle
    red_time: float = 45.0  # EW green duration per cycle
    exit_distance: float = 100.0  # removal point past the stop line
    dt: float = 0.1  # simulation step, seconds
    stop_offset: float = 5.0  # stop line to intersection center
    start_delay: float = 2.5  # reaction + spin-up time when pulling away from a stop

    def __post_init__(self):
        if self.approach_length <= 0:
            raise ValueError("approach_length must be > 0")
        if self.arrival_rate < 0:
            raise ValueError("arrival_rate must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.min_gap <= 0:
            raise ValueError("min_gap must be > 0")
        if self.speed <= 0:
            raise ValueError("speed must be > 0")
        if self.green_time <= 0 or self.red_time <= 0:
            raise ValueError("green_time and red_time must be > 0")
        if self.exit_distance <= 0:
            raise ValueError("exit_distance must be > 0")
        if self.stop_offset < 0:
            raise ValueError("stop_offset must be >= 0")
        if self.start_delay < 0:
            raise ValueError("start_delay must be >= 0")


VOLUME_PRESETS = {
    # vehicles/s per approach; dense keeps queues near the ~40 vehicle
    # group-size ceiling without gridlock
    "medium": 0.05,
    "dense": 0.15,
}


@dataclass
class VehicleState:
    id: int
    approach: str  # one of APPROACHES
    s: float  # meters traveled along the approach, 0 at spawn
    speed: float
    crossed: bool = False
    moving: bool = True
    hold_until: float | None = None  # pending start-up release time


@dataclass
class LightState:
    phase: str = NS_GREEN
    time_in_phase: float = 0.0


def light_at(t: float, cfg: ScenarioConfig) -> LightState:
    """Signal state as a pure function of elapsed time."""
    cycle = cfg.green_time + cfg.red_time
    into = t % cycle
    if into < cfg.green_time:
        return LightState(phase=NS_GREEN, time_in_phase=into)
    return LightState(phase=EW_GREEN, time_in_phase=into - cfg.green_time)


def has_green(approach: str, light: LightState) -> bool:
    if light.phase == NS_GREEN:
        return approach in ("N", "S")
    return approach in ("E", "W")


# Unit vectors pointing from the center toward each spawn point.
_OUTWARD = {"N": (0.0, 1.0), "S": (0.0, -1.0), "E": (1.0, 0.0), "W": (-1.0, 0.0)}


def position_of(v: VehicleState, cfg: ScenarioConfig) -> Position:
    """Map (approach, s) onto the plane, intersection center at the origin.

    A vehicle sits `approach_length + stop_offset - s` meters out along its
    approach axis (negative once it has passed the center and carries on
    straight through).
    """
    out = cfg.approach_length + cfg.stop_offset - v.s
    dx, dy = _OUTWARD[v.approach]
    return Position(x=dx * out, y=dy * out)


def dist_to_center(v: VehicleState, cfg: ScenarioConfig) -> float:
    return abs(cfg.approach_length + cfg.stop_offset - v.s)


@dataclass
class Intersection:
    """Owns the vehicle population, arrival backlog and the signal."""

    cfg: ScenarioConfig
    vehicles: list[VehicleState] = field(default_factory=list)
    pending: dict[str, int] = field(default_factory=lambda: {a: 0 for a in APPROACHES})
    next_id: int = 0
    t: float = 0.0

    def spawn(self, rng: random.Random, now: float) -> list[VehicleState]:
        """One arrival draw per approach; blocked arrivals are deferred.

        A new vehicle appears with probability 1 - exp(-arrival_rate * dt)
        (at most one per approach per step). It is placed at s=0 only if
        the rearmost vehicle on that approach is at least min_gap ahead;
        otherwise the arrival stays pending until the gap opens.
        """
        p_arrive = 1.0 - math.exp(-self.cfg.arrival_rate * self.cfg.dt)
        rear = {a: None for a in APPROACHES}
        for v in self.vehicles:
            r = rear[v.approach]
            if r is None or v.s < r:
                rear[v.approach] = v.s
        spawned = []
        for a in APPROACHES:
            if self.cfg.arrival_rate > 0 and rng.random() < p_arrive:
                self.pending[a] += 1
            if self.pending[a] > 0:
                r = rear[a]
                if r is None or r >= self.cfg.min_gap:
                    v = VehicleState(id=self.next_id, approach=a, s=0.0, speed=self.cfg.speed)
                    self.next_id += 1
                    self.pending[a] -= 1
                    self.vehicles.append(v)
                    spawned.append(v)
        return spawned

    def step(self, dt: float) -> list[VehicleState]:
        """Advance every vehicle by dt and the light with it.

        Returns the vehicles removed this step (past the exit point).
        Motion rules, applied front-to-back per approach: advance at cruise
        speed; hold at the stop line while the approach faces red; never
        close within min_gap of the predecessor; after a full stop, pull
        away only start_delay after the way ahead opens (which is what
        spaces out queue discharge). Crossing the stop line on green sets
        `crossed`.
        """
        cfg = self.cfg
        light = light_at(self.t, cfg)
        stop_line = cfg.approach_length
        removed: list[VehicleState] = []
        by_approach: dict[str, list[VehicleState]] = {a: [] for a in APPROACHES}
        for v in self.vehicles:
            by_approach[v.approach].append(v)
        for a in APPROACHES:
            lane = sorted(by_approach[a], key=lambda v: -v.s)
            green = has_green(a, light)
            prev: VehicleState | None = None
            for v in lane:
                target = v.s + v.speed * dt
                if not green and v.s <= stop_line:
                    target = min(target, stop_line)
                if prev is not None:
                    target = min(target, prev.s - cfg.min_gap)
                if target <= v.s:
                    target = v.s
                    v.hold_until = None  # blocked again, start-up resets
                elif not v.moving:
                    if v.hold_until is None:
                        v.hold_until = self.t + cfg.start_delay
                    if self.t + 1e-9 < v.hold_until:
                        target = v.s
                    else:
                        v.hold_until = None
                v.moving = target > v.s
                v.s = target
                if not v.crossed and v.s > stop_line:
                    v.crossed = True
                prev = v
        survivors = []
        limit = cfg.approach_length + cfg.exit_distance
        for v in self.vehicles:
            if v.s >= limit:
                removed.append(v)
            else:
                survivors.append(v)
        self.vehicles = survivors
        self.t += dt
        return removed
