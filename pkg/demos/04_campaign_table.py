#!/usr/bin/env python3
"""A small Monte-Carlo campaign across the full variant x volume matrix.

This is the same machinery the `leadersim` command drives; 10 runs per
cell keeps the demo around a minute. The headline effects: agreement holds
around 96-98% of occupied time at every cell, re-elections settle well
under a second on average, and the optimized variant cuts message volume
hardest exactly where it matters, in dense traffic.
"""

import tempfile
from pathlib import Path

from leadersim.cli import build_campaign, execute_campaign

out = Path(tempfile.mkdtemp(prefix="leadersim-demo-"))
spec = build_campaign({"runs": 10, "root_seed": 42, "out": str(out)})

print(f"running {len(spec.cells)} cells x {spec.runs} runs "
      f"({spec.duration:.0f}s each, m={spec.channel.m}, CR={spec.channel.cr})...\n")
rows = execute_campaign(spec, quiet=False)

by_cell = {(r["variant"], r["volume"]): r for r in rows}
for vol in ("medium", "dense"):
    basic = by_cell[("basic", vol)]["mean_leader_msgs"]
    opt = by_cell[("optimized", vol)]["mean_leader_msgs"]
    print(f"\n{vol}: optimized sends {1 - opt / basic:.0%} fewer leader messages "
          f"({opt:.0f} vs {basic:.0f})")

print(f"\nper-run details in {out / 'runs.csv'}")
