#!/usr/bin/env python3
"""Cold start: a group of vehicles switches on and elects one leader.

Every node initially claims leadership; claims race over a reliable
channel and the group settles on the best-ranked vehicle within a few
broadcast periods. Shown for both protocol variants.
"""

import math
import random

from leadersim import ChannelConfig, Position, ScenarioConfig, SimConfig, inject_static_topology

def make_ring(n, rng):
    nodes = []
    for vid in range(n):
        r = rng.uniform(3.0, 50.0)
        a = rng.uniform(0, 2 * math.pi)
        nodes.append((vid, Position(r * math.cos(a), r * math.sin(a))))
    return nodes


def convergence_time(result):
    final = {b for _, b, _ in result.snapshots[-1].participants}
    assert len(final) == 1, "group did not converge"
    leader = next(iter(final))
    for s in result.snapshots:
        if {b for _, b, _ in s.participants} == {leader}:
            return s.t, leader
    raise AssertionError


print("Cold-start leader election, 8 vehicles, reliable channel")
print("=" * 60)

for variant in ("basic", "optimized"):
    times = []
    msgs = []
    for seed in range(10):
        nodes = make_ring(8, random.Random(f"demo:{seed}"))
        cfg = SimConfig(
            duration=1.0,
            seed=seed,
            variant=variant,
            channel=ChannelConfig(reliable=True),
            scenario=ScenarioConfig(dt=0.02),
        )
        result = inject_static_topology(nodes, cfg)
        t, leader = convergence_time(result)
        times.append(t)
        msgs.append(result.leader_msg_count)
    print(f"\n{variant}:")
    print(f"  convergence time over 10 seeds: "
          f"min {min(times):.2f}s  mean {sum(times)/len(times):.2f}s  max {max(times):.2f}s")
    print(f"  leader messages in the first second: mean {sum(msgs)/len(msgs):.0f}")

print("\nThe fast broadcast period is 0.1 s; everyone agrees within ~2-3")
print("periods of switch-on, and the optimized variant spends fewer")
print("messages on it once consensus holds.")
