"""Probabilistic broadcast medium with Nakagami-m packet reception.

Every broadcast is delivered to each in-range receiver independently with
probability

    P(d) = exp(-m * d / CR) * sum_{i=1..m} (m * d / CR)^(i-1) / (i-1)!

where d is the sender-receiver distance, m the fading parameter and CR the
intended communication range of the radio. m=1 models a harsh channel,
m=3 a clean one. CR maps to the five standard transmit power levels.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

ALLOWED_M = (1, 2, 3)
ALLOWED_CR = (100, 200, 300, 400, 500)


@dataclass(frozen=True, slots=True)
class Position:
    """A point in the plane, meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"position must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class ChannelConfig:
    """Fading parameter, intended range, hard cutoff and a testing override.

    `max_range` bounds the work done per broadcast; reception probability at
    max_range is already negligible for the default CR. `reliable=True`
    forces every in-range delivery to succeed (used by protocol-only tests).
    """

    m: int = 3
    cr: int = 100
    max_range: float = 300.0
    reliable: bool = False

    def __post_init__(self):
        if self.m not in ALLOWED_M:
            raise ValueError(f"m must be one of {ALLOWED_M}, got {self.m}")
        if self.cr not in ALLOWED_CR:
            raise ValueError(f"cr must be one of {ALLOWED_CR}, got {self.cr}")
        if self.max_range < self.cr:
            raise ValueError(
                f"max_range ({self.max_range}) must be >= cr ({self.cr})"
            )


def packet_reception_rate(d: float, cfg: ChannelConfig) -> float:
    """Probability that a packet sent over distance d is received.

    Closed-form Nakagami-m reception rate, clamped to [0, 1] defensively.
    d=0 returns exactly 1. Raises ValueError for negative d.
    """
    if d < 0:
        raise ValueError(f"distance must be non-negative, got {d}")
    if cfg.reliable:
        return 1.0
    x = cfg.m * d / cfg.cr
    # sum_{i=1..m} x^(i-1)/(i-1)! -- m is at most 3, unroll
    s = 1.0
    if cfg.m >= 2:
        s += x
    if cfg.m >= 3:
        s += 0.5 * x * x
    p = math.exp(-x) * s
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


def broadcast(
    sender: Position,
    receivers: list[tuple[int, Position]],
    cfg: ChannelConfig,
    rng: random.Random,
) -> set[int]:
    """Deliver one broadcast, returning the set of receiver ids that got it.

    Receivers beyond max_range are never included and consume no randomness.
    Exactly one rng draw is consumed per in-range receiver, in list order,
    so a fixed seed and receiver list fix the delivered set.
    """
    delivered = set()
    for vid, pos in receivers:
        d = sender.distance_to(pos)
        if d > cfg.max_range:
            continue
        if rng.random() < packet_reception_rate(d, cfg):
            delivered.add(vid)
    return delivered
