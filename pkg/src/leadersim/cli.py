"""Batch campaign runner.

Parses a flat key=value config file plus command-line overrides, executes a
seeded matrix of (variant x traffic volume) cells, writes `summary.csv`
(one row per cell), per-run `runs.csv`, optional per-run JSONL event logs,
and prints a summary table.

Per-run seeds are a pure function of (root_seed, cell index, run index):
    sha256("{root_seed}:{cell}:{run}") -> first 8 bytes, big-endian int
so any single run can be reproduced in isolation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .channel import ALLOWED_CR, ALLOWED_M, ChannelConfig
from .engine import RunResult, SimConfig, run
from .metrics import RunStats, aggregate, run_stats
from .mobility import VOLUME_PRESETS, ScenarioConfig
from .protocol import BASIC, OPTIMIZED, ProtocolConfig

SUMMARY_HEADER = (
    "variant,volume,m,cr,runs,stable_pct,avg_conv_s,max_conv_s,"
    "global_max_conv_s,mean_leader_msgs,mean_bsm_msgs,root_seed"
)

RUNS_HEADER = (
    "cell,variant,volume,run,seed,occupied_steps,stable_steps,stable_pct,"
    "episodes,max_conv_s,leader_msgs,bsm_msgs"
)


class ConfigError(Exception):
    pass


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# Every key the config file accepts, with its parser.
CONFIG_KEYS = {
    "runs": int,
    "root_seed": int,
    "variant": str,
    "volume": str,
    "m": int,
    "cr": int,
    "max_range": float,
    "reliable": _parse_bool,
    "duration": float,
    "bsm_period": float,
    "participation_radius": float,
    "t_p": float,
    "t_p_slow": float,
    "t_silence": float,
    "consensus_quiet": float,
    "allow_slow": _parse_bool,
    "approach_length": float,
    "speed": float,
    "min_gap": float,
    "arrival_rate": float,
    "green_time": float,
    "red_time": float,
    "exit_distance": float,
    "dt": float,
    "stop_offset": float,
    "start_delay": float,
    "out": str,
    "events": _parse_bool,
}


def load_config(path: str | Path) -> dict:
    """Parse a flat key=value file; `#` starts a comment.

    Unknown keys and malformed lines are rejected with their line number.
    """
    settings: dict = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            settings[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return settings


@dataclass(frozen=True)
class Cell:
    variant: str
    volume: str
    arrival_rate: float


@dataclass
class CampaignSpec:
    runs: int
    root_seed: int
    cells: list[Cell]
    protocol: ProtocolConfig
    channel: ChannelConfig
    scenario: ScenarioConfig
    duration: float
    bsm_period: float
    participation_radius: float
    out_dir: Path
    write_events: bool

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if not self.cells:
            raise ConfigError("campaign matrix is empty")


def build_campaign(settings: dict) -> CampaignSpec:
    """Turn merged settings into a validated campaign."""
    try:
        protocol_cfg = ProtocolConfig(
            t_p=settings.get("t_p", 0.1),
            t_p_slow=settings.get("t_p_slow", 0.125),
            t_silence=settings.get("t_silence", 0.5),
            consensus_quiet=settings.get("consensus_quiet", 1.0),
            allow_slow=settings.get("allow_slow", True),
        )
        m = settings.get("m", 3)
        cr = settings.get("cr", 100)
        if m not in ALLOWED_M:
            raise ConfigError(f"m must be one of {list(ALLOWED_M)}, got {m}")
        if cr not in ALLOWED_CR:
            raise ConfigError(f"cr must be one of {list(ALLOWED_CR)}, got {cr}")
        channel_cfg = ChannelConfig(
            m=m,
            cr=cr,
            max_range=settings.get("max_range", 300.0),
            reliable=settings.get("reliable", False),
        )
        scenario_cfg = ScenarioConfig(
            approach_length=settings.get("approach_length", 100.0),
            speed=settings.get("speed", 10.0),
            min_gap=settings.get("min_gap", 7.0),
            green_time=settings.get("green_time", 45.0),
            red_time=settings.get("red_time", 45.0),
            exit_distance=settings.get("exit_distance", 100.0),
            dt=settings.get("dt", 0.1),
            stop_offset=settings.get("stop_offset", 5.0),
            start_delay=settings.get("start_delay", 2.5),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    variant = settings.get("variant")
    if variant is not None and variant not in (BASIC, OPTIMIZED):
        raise ConfigError(f"variant must be {BASIC!r} or {OPTIMIZED!r}, got {variant!r}")
    volume = settings.get("volume")
    if volume is not None and volume not in VOLUME_PRESETS and "arrival_rate" not in settings:
        raise ConfigError(
            f"volume must be one of {sorted(VOLUME_PRESETS)}, got {volume!r}"
        )

    variants = [variant] if variant else [BASIC, OPTIMIZED]
    if "arrival_rate" in settings:
        volumes = [(volume or "custom", settings["arrival_rate"])]
    elif volume:
        volumes = [(volume, VOLUME_PRESETS[volume])]
    else:
        volumes = [(v, VOLUME_PRESETS[v]) for v in ("medium", "dense")]

    cells = [
        Cell(variant=va, volume=vol, arrival_rate=rate)
        for va in variants
        for vol, rate in volumes
    ]
    try:
        return CampaignSpec(
            runs=settings.get("runs", 100),
            root_seed=settings.get("root_seed", 0),
            cells=cells,
            protocol=protocol_cfg,
            channel=channel_cfg,
            scenario=scenario_cfg,
            duration=settings.get("duration", 180.0),
            bsm_period=settings.get("bsm_period", 0.1),
            participation_radius=settings.get("participation_radius", 70.0),
            out_dir=Path(settings.get("out", "out")),
            write_events=settings.get("events", False),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def run_seed(root_seed: int, cell_index: int, run_index: int) -> int:
    digest = hashlib.sha256(f"{root_seed}:{cell_index}:{run_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def sim_config_for(spec: CampaignSpec, cell: Cell, cell_index: int, run_index: int,
                   record_events: bool) -> SimConfig:
    return SimConfig(
        duration=spec.duration,
        seed=run_seed(spec.root_seed, cell_index, run_index),
        variant=cell.variant,
        protocol=replace(spec.protocol, variant=cell.variant),
        channel=spec.channel,
        scenario=replace(spec.scenario, arrival_rate=cell.arrival_rate),
        bsm_period=spec.bsm_period,
        participation_radius=spec.participation_radius,
        record_events=record_events,
        volume_label=cell.volume,
    )


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return format(x, ".6g")


def _event_lines(result: RunResult) -> list[str]:
    lines = []
    for e in result.events:
        lines.append(
            json.dumps(
                {"t": round(e.t, 6), "kind": e.kind, "subject": e.subject,
                 "detail": e.detail},
                sort_keys=True,
                separators=(",", ":"),
            )
        )
    return lines


def execute_campaign(spec: CampaignSpec, quiet: bool = False) -> list[dict]:
    """Run every cell; write summary.csv, runs.csv and optional event logs.

    Returns the summary rows as dicts (one per cell, in matrix order).
    """
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    summary_rows: list[dict] = []
    runs_lines: list[str] = [RUNS_HEADER]

    for ci, cell in enumerate(spec.cells):
        stats: list[RunStats] = []
        for ri in range(spec.runs):
            cfg = sim_config_for(spec, cell, ci, ri, record_events=spec.write_events)
            result = run(cfg)
            if spec.write_events:
                global_index = ci * spec.runs + ri
                path = spec.out_dir / f"events-{global_index}.jsonl"
                path.write_text("\n".join(_event_lines(result)) + "\n")
            rs = run_stats(result)
            stats.append(rs)
            frac = rs.stable_fraction
            runs_lines.append(
                ",".join(
                    [
                        str(ci), cell.variant, cell.volume, str(ri), str(cfg.seed),
                        str(rs.occupied_steps), str(rs.stable_steps),
                        _fmt(frac) if frac is not None else "",
                        str(len(rs.episode_durations)),
                        _fmt(rs.max_episode) if rs.max_episode is not None else "",
                        str(rs.leader_msgs), str(rs.bsm_msgs),
                    ]
                )
            )
        summary = aggregate(stats)
        summary_rows.append(
            {
                "variant": cell.variant,
                "volume": cell.volume,
                "m": spec.channel.m,
                "cr": spec.channel.cr,
                "runs": spec.runs,
                "stable_pct": summary.stable_pct,
                "avg_conv_s": summary.avg_convergence,
                "max_conv_s": summary.max_convergence,
                "global_max_conv_s": summary.global_max_convergence,
                "mean_leader_msgs": summary.mean_leader_msgs,
                "mean_bsm_msgs": summary.mean_bsm_msgs,
                "root_seed": spec.root_seed,
            }
        )

    header_cols = SUMMARY_HEADER.split(",")
    lines = [SUMMARY_HEADER]
    for row in summary_rows:
        lines.append(",".join(_fmt(row[c]) if not isinstance(row[c], str) else row[c]
                              for c in header_cols))
    (spec.out_dir / "summary.csv").write_text("\n".join(lines) + "\n")
    (spec.out_dir / "runs.csv").write_text("\n".join(runs_lines) + "\n")

    if not quiet:
        _print_table(header_cols, summary_rows)
        print(f"\nwrote {spec.out_dir / 'summary.csv'}")
    return summary_rows


def _print_table(columns: list[str], rows: list[dict]) -> None:
    cells = [[c for c in columns]] + [
        [row[c] if isinstance(row[c], str) else _fmt(row[c]) for c in columns]
        for row in rows
    ]
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    for i, r in enumerate(cells):
        print("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
        if i == 0:
            print("  ".join("-" * w for w in widths))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="leadersim",
        description="Run seeded leader-selection campaigns and summarize them.",
    )
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--runs", type=int, help="runs per matrix cell (default 100)")
    p.add_argument("--seed", type=int, help="campaign root seed (default 0)")
    p.add_argument("--variant", choices=[BASIC, OPTIMIZED],
                   help="restrict the matrix to one protocol variant")
    p.add_argument("--volume", choices=sorted(VOLUME_PRESETS),
                   help="restrict the matrix to one traffic volume preset")
    p.add_argument("--m", type=int, help="Nakagami fading parameter (1, 2 or 3)")
    p.add_argument("--cr", type=int,
                   help="intended communication range in meters (100..500)")
    p.add_argument("--out", help="output directory (default ./out)")
    p.add_argument("--events", action="store_true",
                   help="write per-run JSONL event logs")
    p.add_argument("--quiet", action="store_true", help="suppress the console table")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    try:
        settings = load_config(args.config) if args.config else {}
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    overrides = {
        "runs": args.runs,
        "root_seed": args.seed,
        "variant": args.variant,
        "volume": args.volume,
        "m": args.m,
        "cr": args.cr,
        "out": args.out,
    }
    for key, value in overrides.items():
        if value is not None:
            settings[key] = value
    if args.events:
        settings["events"] = True

    try:
        spec = build_campaign(settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"usage: {parser.format_usage().strip()}", file=sys.stderr)
        return 2

    try:
        execute_campaign(spec, quiet=args.quiet)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 1
    return 0


def console_main() -> None:
    sys.exit(main())
