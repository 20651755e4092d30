"""Agreement metrics over run outputs and campaign-level aggregation.

A snapshot is *stable* when every participating vehicle names the same
believed leader and that leader is itself still participating (a departed
leader that is still being named does not count). Convergence episodes are
the maximal unstable stretches of occupied time; the summary reports the
share of stable occupied time, pooled mean episode duration, the across-run
mean of per-run maxima (plus the global maximum) and mean message counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean

from .engine import RunResult, Snapshot


def is_stable(s: Snapshot) -> bool:
    """True iff the snapshot shows unanimity on a present leader (or is empty)."""
    if not s.participants:
        return True
    present = {vid for vid, _, _ in s.participants}
    believed = {b for _, b, _ in s.participants}
    if len(believed) != 1:
        return False
    return next(iter(believed)) in present


def convergence_episodes(snapshots: list[Snapshot]) -> list[tuple[float, float]]:
    """Maximal (start, end) intervals of occupied, unstable time.

    Snapshots must be time-ordered. An episode opens at the first unstable
    occupied snapshot (possibly at run start) and closes at the next stable
    or empty one; an episode still open at the end of the run closes one
    step past the last snapshot.
    """
    episodes: list[tuple[float, float]] = []
    start: float | None = None
    last_t = 0.0
    prev_t: float | None = None
    step = 0.0
    for s in snapshots:
        if prev_t is not None and step == 0.0:
            step = s.t - prev_t
        prev_t = s.t
        unstable = bool(s.participants) and not is_stable(s)
        if unstable and start is None:
            start = s.t
        elif not unstable and start is not None:
            episodes.append((start, s.t))
            start = None
        last_t = s.t
    if start is not None:
        episodes.append((start, last_t + step))
    return episodes


@dataclass(frozen=True)
class RunStats:
    """Reduced per-run numbers, enough for any campaign aggregate."""

    occupied_steps: int
    stable_steps: int
    episode_durations: tuple[float, ...]
    leader_msgs: int
    bsm_msgs: int

    @property
    def stable_fraction(self) -> float | None:
        if self.occupied_steps == 0:
            return None
        return self.stable_steps / self.occupied_steps

    @property
    def max_episode(self) -> float | None:
        return max(self.episode_durations) if self.episode_durations else None


def run_stats(result: RunResult) -> RunStats:
    occupied = 0
    stable = 0
    for s in result.snapshots:
        if s.participants:
            occupied += 1
            if is_stable(s):
                stable += 1
    durations = tuple(e - s for s, e in convergence_episodes(result.snapshots))
    return RunStats(
        occupied_steps=occupied,
        stable_steps=stable,
        episode_durations=durations,
        leader_msgs=result.leader_msg_count,
        bsm_msgs=result.bsm_count,
    )


@dataclass(frozen=True)
class SummaryStats:
    stable_pct: float  # fraction in [0, 1]
    avg_convergence: float  # mean episode duration pooled over runs, seconds
    max_convergence: float  # mean over runs of each run's maximum episode
    global_max_convergence: float  # single worst episode anywhere
    mean_leader_msgs: float
    mean_bsm_msgs: float
    runs: int


def aggregate(stats: list[RunStats]) -> SummaryStats:
    """Campaign summary from per-run stats.

    stable_pct averages the per-run stable share over runs that had any
    occupied steps; runs that never had a participant carry no agreement
    information and are left out of that mean. Convergence means cover
    only runs/episodes that exist; with no episodes at all they are 0.
    """
    if not stats:
        raise ValueError("no runs to summarize")
    fractions = [s.stable_fraction for s in stats if s.stable_fraction is not None]
    stable_pct = fmean(fractions) if fractions else 1.0
    pooled = [d for s in stats for d in s.episode_durations]
    maxima = [s.max_episode for s in stats if s.max_episode is not None]
    return SummaryStats(
        stable_pct=stable_pct,
        avg_convergence=fmean(pooled) if pooled else 0.0,
        max_convergence=fmean(maxima) if maxima else 0.0,
        global_max_convergence=max(pooled) if pooled else 0.0,
        mean_leader_msgs=fmean(s.leader_msgs for s in stats),
        mean_bsm_msgs=fmean(s.bsm_msgs for s in stats),
        runs=len(stats),
    )


def summarize(results: list[RunResult]) -> SummaryStats:
    """Aggregate full run results (empty input is an error)."""
    if not results:
        raise ValueError("no runs to summarize")
    return aggregate([run_stats(r) for r in results])
