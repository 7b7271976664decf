"""Temporal boundary model: anchors, window energies, sample coverage.

Four ordered anchors partition a run into a pre-run diagnostic window,
the attributed window [t0, t1] (the only interval whose energy enters
goal-level metrics), and a post-run teardown window. Coverage measures
how completely the sample stream spans the attributed window, which
bounds how reliably phase boundaries can be resolved.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .counters import CounterDomain, CounterSnapshot, counter_delta
from .errors import GoalMeterError
from .sampler import SampleInterval

GOLD_THRESHOLD_PCT = 95.0
ACCEPTABLE_THRESHOLD_PCT = 80.0


class AnchorsOutOfOrder(GoalMeterError):
    pass


class EmptyWindow(GoalMeterError):
    pass


class CoverageTier(str, Enum):
    GOLD = "gold"
    ACCEPTABLE = "acceptable"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class BoundaryAnchors:
    """Monotonic-ns anchors: t_pre <= t0 < t1 <= t2."""

    t_pre: int
    t0: int
    t1: int
    t2: int

    def __post_init__(self) -> None:
        if not (self.t_pre <= self.t0 < self.t1 <= self.t2):
            raise AnchorsOutOfOrder(
                f"anchors must satisfy t_pre <= t0 < t1 <= t2, "
                f"got {self.t_pre}, {self.t0}, {self.t1}, {self.t2}"
            )


@dataclass(frozen=True)
class WindowEnergy:
    """Wrap-corrected energy of the three non-overlapping windows, uJ.

    e_pre and e_post are recorded for diagnostics and never enter EpG.
    """

    e_task_uj: float
    e_pre_uj: float
    e_post_uj: float


@dataclass(frozen=True)
class CoverageReport:
    coverage_pct: float
    max_unobserved_gap_ms: float
    tier: CoverageTier


def window_energy(
    snap_pre: CounterSnapshot,
    snap_t0: CounterSnapshot,
    snap_t1: CounterSnapshot,
    snap_t2: CounterSnapshot,
) -> WindowEnergy:
    """Energy of each anchor window from two-read counter deltas.

    Exact regardless of sampling density: the task total never depends
    on how many intermediate samples were collected or dropped.
    """
    BoundaryAnchors(
        snap_pre.timestamp_ns,
        snap_t0.timestamp_ns,
        snap_t1.timestamp_ns,
        snap_t2.timestamp_ns,
    )
    pkg = CounterDomain.PACKAGE
    return WindowEnergy(
        e_task_uj=counter_delta(snap_t0, snap_t1, pkg),
        e_pre_uj=counter_delta(snap_pre, snap_t0, pkg),
        e_post_uj=counter_delta(snap_t1, snap_t2, pkg),
    )


def classify_tier(coverage_pct: float) -> CoverageTier:
    """Tier thresholds are inclusive: 95.0 is gold, 80.0 acceptable."""
    if coverage_pct >= GOLD_THRESHOLD_PCT:
        return CoverageTier.GOLD
    if coverage_pct >= ACCEPTABLE_THRESHOLD_PCT:
        return CoverageTier.ACCEPTABLE
    return CoverageTier.EXCLUDED


def merged_spans(
    intervals: list[SampleInterval], t0: int, t1: int
) -> list[tuple[int, int]]:
    """Union of non-missed sample spans clipped to [t0, t1], sorted."""
    clipped = []
    for interval in intervals:
        if interval.missed:
            continue
        start = max(interval.sample_start_ns, t0)
        end = min(interval.sample_end_ns, t1)
        if end > start:
            clipped.append((start, end))
    clipped.sort()
    merged: list[tuple[int, int]] = []
    for start, end in clipped:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def coverage(intervals: list[SampleInterval], t0: int, t1: int) -> CoverageReport:
    """Fraction of [t0, t1] spanned by the union of sample intervals.

    Overlapping intervals are counted once; missed intervals are
    excluded. Computed by sort-and-sweep.
    """
    if t1 <= t0:
        raise EmptyWindow("coverage window must have positive duration")
    merged = merged_spans(intervals, t0, t1)
    covered_ns = sum(end - start for start, end in merged)
    pct = 100.0 * covered_ns / (t1 - t0)

    gaps_ns = []
    cursor = t0
    for start, end in merged:
        if start > cursor:
            gaps_ns.append(start - cursor)
        cursor = end
    if cursor < t1:
        gaps_ns.append(t1 - cursor)
    max_gap_ms = max(gaps_ns) / 1e6 if gaps_ns else 0.0
    return CoverageReport(
        coverage_pct=pct,
        max_unobserved_gap_ms=max_gap_ms,
        tier=classify_tier(pct),
    )
