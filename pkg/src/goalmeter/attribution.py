"""Layered energy attribution: baseline subtraction, CPU-fraction
process attribution, phase decomposition, and the time-fraction
counterfactual.

The pipeline refines raw package energy in order: subtract idle
baseline, project onto the target process by its share of CPU ticks,
then split the attributed total across semantic phase windows from the
sample stream. Energy overlapping no phase window accrues to the gap
term, which further splits into retry energy (failed-attempt windows)
and coordination energy.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .baseline import BaselineRecord, baseline_energy
from .errors import GoalMeterError
from .sampler import SampleInterval, interval_energy_uj

DECOMPOSITION_TOLERANCE_UJ = 1000.0  # 1 mJ


class NoTicks(GoalMeterError):
    """No CPU ticks elapsed over the window: degenerate sub-tick run."""


class PhaseOutsideWindow(GoalMeterError):
    pass


class Phase(str, Enum):
    PLANNING = "planning"
    EXECUTION = "execution"
    SYNTHESIS = "synthesis"


@dataclass(frozen=True)
class CpuTickDelta:
    """Deltas of process and whole-system CPU ticks over [t0, t1].

    pid_ticks is clamped into [0, total_ticks]; `clamped` records
    whether clamping fired so it can surface as a run-quality flag.
    """

    pid_ticks: int
    total_ticks: int
    clamped: bool = False

    @classmethod
    def from_counts(cls, pid_ticks: int, total_ticks: int) -> "CpuTickDelta":
        clamped_pid = min(max(pid_ticks, 0), max(total_ticks, 0))
        return cls(
            pid_ticks=clamped_pid,
            total_ticks=max(total_ticks, 0),
            clamped=clamped_pid != pid_ticks,
        )


@dataclass(frozen=True)
class PhaseWindow:
    phase: Phase
    start_ns: int
    end_ns: int
    attempt_index: int = 1

    def __post_init__(self) -> None:
        if self.end_ns <= self.start_ns:
            raise ValueError("phase window must have positive duration")


@dataclass(frozen=True)
class PhaseDecomposition:
    """Attributed energy split across phases plus the residual gap (uJ)."""

    e_planning_uj: float
    e_execution_uj: float
    e_synthesis_uj: float
    e_gap_uj: float

    def total_uj(self) -> float:
        return (
            self.e_planning_uj
            + self.e_execution_uj
            + self.e_synthesis_uj
            + self.e_gap_uj
        )

    def as_dict(self) -> dict[str, float]:
        return {
            "planning": self.e_planning_uj,
            "execution": self.e_execution_uj,
            "synthesis": self.e_synthesis_uj,
            "gap": self.e_gap_uj,
        }


@dataclass(frozen=True)
class AttributionResult:
    """The full attribution ledger for one run."""

    e_pkg_uj: float
    e_dyn_uj: float
    e_attr_uj: float
    phases: PhaseDecomposition
    e_retry_uj: float
    e_coordination_uj: float
    counterfactual: PhaseDecomposition
    clamp_applied: bool

    CSV_COLUMNS = (
        "run_id",
        "e_pkg_uj",
        "e_dyn_uj",
        "e_attr_uj",
        "e_planning_uj",
        "e_execution_uj",
        "e_synthesis_uj",
        "e_gap_uj",
        "e_retry_uj",
        "e_coordination_uj",
        "clamp_applied",
    )

    def csv_row(self, run_id: str) -> list[str]:
        return [
            run_id,
            repr(self.e_pkg_uj),
            repr(self.e_dyn_uj),
            repr(self.e_attr_uj),
            repr(self.phases.e_planning_uj),
            repr(self.phases.e_execution_uj),
            repr(self.phases.e_synthesis_uj),
            repr(self.phases.e_gap_uj),
            repr(self.e_retry_uj),
            repr(self.e_coordination_uj),
            str(int(self.clamp_applied)),
        ]


def dynamic_energy(
    e_pkg_uj: float, baseline: BaselineRecord, dt_s: float
) -> tuple[float, bool]:
    """Baseline-subtracted energy: max(0, e_pkg - P_baseline * dt).

    Returns (e_dyn_uj, clamp_applied); the clamp is recorded, never
    silent.
    """
    idle_uj = baseline_energy(baseline, dt_s) * 1e6
    raw = e_pkg_uj - idle_uj
    if raw < 0:
        return 0.0, True
    return raw, False


def cpu_fraction(ticks: CpuTickDelta) -> float:
    """Target-process share of CPU ticks, clamped to [0, 1]."""
    if ticks.total_ticks <= 0:
        raise NoTicks("no CPU ticks elapsed over the attribution window")
    return min(max(ticks.pid_ticks / ticks.total_ticks, 0.0), 1.0)


def attributed_energy(e_dyn_uj: float, f_cpu: float) -> float:
    if not 0.0 <= f_cpu <= 1.0:
        raise ValueError("f_cpu must lie in [0, 1]")
    return e_dyn_uj * f_cpu


def _validate_phases(phases: list[PhaseWindow], t0: int, t1: int) -> None:
    for window in phases:
        if window.start_ns < t0 or window.end_ns > t1:
            raise PhaseOutsideWindow(
                f"{window.phase.value} window [{window.start_ns}, {window.end_ns}] "
                f"extends beyond [{t0}, {t1}]"
            )
    ordered = sorted(phases, key=lambda w: w.start_ns)
    for a, b in zip(ordered, ordered[1:]):
        if b.start_ns < a.end_ns:
            raise ValueError("phase windows of one run must not overlap")


def _overlap_ns(a_start: int, a_end: int, b_start: int, b_end: int) -> int:
    return max(0, min(a_end, b_end) - max(a_start, b_start))


def _raw_phase_sums(
    intervals: list[SampleInterval],
    phases: list[PhaseWindow],
    t0: int,
    t1: int,
    range_uj: float,
) -> tuple[dict[Phase, float], float]:
    """Raw (package-level) sample energy per phase and in the gap.

    Each interval's energy is split pro-rata by temporal overlap,
    assuming uniform power inside one short interval.
    """
    sums = {phase: 0.0 for phase in Phase}
    gap_sum = 0.0
    for interval in intervals:
        if interval.missed:
            continue
        duration = interval.sample_end_ns - interval.sample_start_ns
        if duration <= 0:
            continue
        in_window = _overlap_ns(
            interval.sample_start_ns, interval.sample_end_ns, t0, t1
        )
        if in_window == 0:
            continue
        energy = interval_energy_uj(interval, range_uj)
        in_phases = 0
        for window in phases:
            shared = _overlap_ns(
                interval.sample_start_ns,
                interval.sample_end_ns,
                max(window.start_ns, t0),
                min(window.end_ns, t1),
            )
            if shared:
                sums[window.phase] += energy * shared / duration
                in_phases += shared
        gap_sum += energy * (in_window - in_phases) / duration
    return sums, gap_sum


def phase_decompose(
    intervals: list[SampleInterval],
    phases: list[PhaseWindow],
    t0: int,
    t1: int,
    e_attr_uj: float,
    range_uj: float,
) -> PhaseDecomposition:
    """Split attributed energy across phase windows from the samples.

    Raw per-phase sample sums are rescaled by one common factor so the
    four components add up to exactly e_attr_uj (the process-attribution
    projection applied uniformly; per-phase CPU fractions are not
    observable at tick granularity). When no sample overlaps the window
    the decomposition is unresolvable and the gap absorbs the total.
    """
    _validate_phases(phases, t0, t1)
    sums, gap_sum = _raw_phase_sums(intervals, phases, t0, t1, range_uj)
    raw_total = sum(sums.values()) + gap_sum
    if raw_total <= 0:
        return PhaseDecomposition(0.0, 0.0, 0.0, e_attr_uj)
    scale = e_attr_uj / raw_total
    return PhaseDecomposition(
        e_planning_uj=sums[Phase.PLANNING] * scale,
        e_execution_uj=sums[Phase.EXECUTION] * scale,
        e_synthesis_uj=sums[Phase.SYNTHESIS] * scale,
        e_gap_uj=gap_sum * scale,
    )


def split_gap(
    gap_uj: float,
    intervals: list[SampleInterval],
    failed_attempt_windows: list[tuple[int, int]],
    *,
    phases: list[PhaseWindow],
    t0: int,
    t1: int,
    range_uj: float,
) -> tuple[float, float]:
    """Split gap energy into (retry_uj, coordination_uj).

    Gap energy overlapping a failed-attempt window is retry energy; the
    remainder is coordination. Failed-attempt windows must lie within
    [t0, t1] and be disjoint from the successful attempt's phase
    windows. The two parts always sum to gap_uj exactly.
    """
    for start, end in failed_attempt_windows:
        if start < t0 or end > t1:
            raise ValueError("failed-attempt window outside [t0, t1]")
        for window in phases:
            if _overlap_ns(start, end, window.start_ns, window.end_ns):
                raise ValueError("failed-attempt window overlaps a phase window")
    retry_raw = 0.0
    gap_raw = 0.0
    for interval in intervals:
        if interval.missed:
            continue
        duration = interval.sample_end_ns - interval.sample_start_ns
        if duration <= 0:
            continue
        in_window = _overlap_ns(
            interval.sample_start_ns, interval.sample_end_ns, t0, t1
        )
        if in_window == 0:
            continue
        energy = interval_energy_uj(interval, range_uj)
        in_phases = sum(
            _overlap_ns(
                interval.sample_start_ns,
                interval.sample_end_ns,
                max(w.start_ns, t0),
                min(w.end_ns, t1),
            )
            for w in phases
        )
        in_failed = sum(
            _overlap_ns(interval.sample_start_ns, interval.sample_end_ns, start, end)
            for start, end in failed_attempt_windows
        )
        gap_raw += energy * (in_window - in_phases) / duration
        retry_raw += energy * in_failed / duration
    if gap_raw <= 0:
        return 0.0, gap_uj
    retry_uj = gap_uj * retry_raw / gap_raw
    return retry_uj, gap_uj - retry_uj


def time_fraction_counterfactual(
    phases: list[PhaseWindow], t0: int, t1: int, e_attr_uj: float
) -> PhaseDecomposition:
    """Duration-proportional allocation (the flawed method, kept for
    comparison): E_phase = e_attr * duration_phase / (t1 - t0).

    Agrees with the measured decomposition only when power is constant
    over the run.
    """
    _validate_phases(phases, t0, t1)
    window_ns = t1 - t0
    durations = {phase: 0 for phase in Phase}
    for window in phases:
        durations[window.phase] += window.end_ns - window.start_ns
    named_ns = sum(durations.values())
    return PhaseDecomposition(
        e_planning_uj=e_attr_uj * durations[Phase.PLANNING] / window_ns,
        e_execution_uj=e_attr_uj * durations[Phase.EXECUTION] / window_ns,
        e_synthesis_uj=e_attr_uj * durations[Phase.SYNTHESIS] / window_ns,
        e_gap_uj=e_attr_uj * (window_ns - named_ns) / window_ns,
    )


def attribute_run(
    e_pkg_uj: float,
    baseline: BaselineRecord,
    ticks: CpuTickDelta,
    intervals: list[SampleInterval],
    phases: list[PhaseWindow],
    failed_attempt_windows: list[tuple[int, int]],
    t0: int,
    t1: int,
    range_uj: float,
) -> AttributionResult:
    """Run the full pipeline for one run window."""
    dt_s = (t1 - t0) / 1e9
    e_dyn_uj, clamp_applied = dynamic_energy(e_pkg_uj, baseline, dt_s)
    e_attr_uj = attributed_energy(e_dyn_uj, cpu_fraction(ticks))
    decomposition = phase_decompose(intervals, phases, t0, t1, e_attr_uj, range_uj)
    retry_uj, coordination_uj = split_gap(
        decomposition.e_gap_uj,
        intervals,
        failed_attempt_windows,
        phases=phases,
        t0=t0,
        t1=t1,
        range_uj=range_uj,
    )
    return AttributionResult(
        e_pkg_uj=e_pkg_uj,
        e_dyn_uj=e_dyn_uj,
        e_attr_uj=e_attr_uj,
        phases=decomposition,
        e_retry_uj=retry_uj,
        e_coordination_uj=coordination_uj,
        counterfactual=time_fraction_counterfactual(phases, t0, t1, e_attr_uj),
        clamp_applied=clamp_applied,
    )


def read_pid_ticks(pid: int) -> int:
    """utime + stime for a process, from /proc/<pid>/stat."""
    text = Path(f"/proc/{pid}/stat").read_text()
    # comm may contain spaces and parentheses; fields resume after the last ')'
    after_comm = text.rsplit(")", 1)[1].split()
    utime, stime = int(after_comm[11]), int(after_comm[12])
    return utime + stime


def read_total_ticks() -> int:
    """Sum of the aggregate cpu line of /proc/stat."""
    with open("/proc/stat") as handle:
        first = handle.readline().split()
    if not first or first[0] != "cpu":
        raise OSError("unexpected /proc/stat layout")
    return sum(int(v) for v in first[1:])
