"""Canonical trace fixture: a deterministic sample stream + event set
whose attribution ledger lands on known round-number layer values.

The agentic run is a two-attempt workflow (one injected failure, one
success) over a 91.5 s attribution window; the linear companion is a
single-pass run over 8 s. Both share one baseline record, so the pair
exercises every layer of the pipeline end to end with exact oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

from .attribution import CpuTickDelta, Phase, PhaseWindow
from .baseline import BaselineRecord
from .boundary import BoundaryAnchors
from .counters import CounterDomain, CounterSnapshot
from .harness import RunMeasurement
from .sampler import SampleInterval
from .workflow import (
    Attempt,
    EvaluatorKind,
    Goal,
    Outcome,
    SuccessEvaluator,
    WorkflowType,
    WorkflowUnit,
)

RANGE_UJ = 262144000000.0  # a realistic powercap wrap modulus
COUNTER_OFFSET_UJ = 987654321.0
SAMPLE_PERIOD_MS = 10

# agentic run layer targets (joules)
AGENTIC_E_PKG_J = 4274.1
AGENTIC_E_DYN_J = 3827.7
AGENTIC_E_ATTR_J = 3614.5
AGENTIC_PHASE_J = {"planning": 552.6, "execution": 115.2, "synthesis": 69.2}
AGENTIC_GAP_J = 2877.5
AGENTIC_RETRY_J = 2256.1
AGENTIC_COORDINATION_J = 621.4
AGENTIC_BASELINE_J = 446.4
AGENTIC_WINDOW_MS = 91_500
AGENTIC_TICKS = (36_145, 38_277)  # quotient equals e_attr / e_dyn
AGENTIC_PRE_UJ = 87_591.0
AGENTIC_POST_UJ = 3_389_794.0

# segment durations inside the agentic window, milliseconds
RETRY_MS = 30_000
PLANNING_MS = 35_127
EXECUTION_MS = 7_787
SYNTHESIS_MS = 2_671
COORD_CHUNKS_MS = (5_000, 4_000, 3_000, 3_915)

LINEAR_E_ATTR_J = 254.5
LINEAR_E_DYN_J = 260.0
LINEAR_WINDOW_MS = 8_000
LINEAR_TICKS = (2_545, 2_600)
LINEAR_PRE_UJ = 50_000.0
LINEAR_POST_UJ = 100_000.0

BASELINE_POWER_W = AGENTIC_BASELINE_J / (AGENTIC_WINDOW_MS / 1e3)


@dataclass(frozen=True)
class _Segment:
    duration_ms: int
    power_w: float
    label: str


@dataclass
class FixtureRun:
    run_id: str
    workflow_type: WorkflowType
    unit: WorkflowUnit
    measurement: RunMeasurement
    phases: list[PhaseWindow]  # successful attempt's windows
    failed_windows: list[tuple[int, int]]


def canonical_baseline() -> BaselineRecord:
    return BaselineRecord(
        mean_power_w=BASELINE_POWER_W,
        sigma_w=0.0,
        n_windows_used=10,
        n_windows_rejected=0,
        window_s=10.0,
        governor="powersave",
        turbo="enabled",
        affinity_pinned=False,
        created_at="sim:0.000000",
    )


def _snapshot(timestamp_ns: int, cumulative_uj: float) -> CounterSnapshot:
    return CounterSnapshot(
        timestamp_ns=timestamp_ns,
        cumulative_uj={CounterDomain.PACKAGE: cumulative_uj % RANGE_UJ},
        max_range_uj={CounterDomain.PACKAGE: RANGE_UJ},
    )


class _TraceBuilder:
    """Piecewise-constant power trace with 10 ms samples cut at every
    segment boundary, so pro-rata splitting recovers segment energies
    exactly."""

    def __init__(self, start_ns: int) -> None:
        self.start_ns = start_ns
        self.segments: list[_Segment] = []

    def add(self, duration_ms: int, power_w: float, label: str) -> None:
        self.segments.append(_Segment(duration_ms, power_w, label))

    def add_energy(self, duration_ms: int, energy_uj: float, label: str) -> None:
        self.add(duration_ms, energy_uj / 1e6 / (duration_ms / 1e3), label)

    def boundary_ns(self, label: str, which: str = "start") -> int:
        cursor = self.start_ns
        for segment in self.segments:
            if segment.label == label:
                if which == "start":
                    return cursor
                return cursor + segment.duration_ms * 1_000_000
            cursor += segment.duration_ms * 1_000_000
        raise KeyError(label)

    def end_ns(self) -> int:
        return self.start_ns + sum(s.duration_ms for s in self.segments) * 1_000_000

    def cumulative_uj(self, t_ns: int) -> float:
        total = COUNTER_OFFSET_UJ
        cursor = self.start_ns
        for segment in self.segments:
            seg_end = cursor + segment.duration_ms * 1_000_000
            take_ns = min(t_ns, seg_end) - cursor
            if take_ns <= 0:
                break
            total += segment.power_w * take_ns / 1e3
            cursor = seg_end
        return total

    def samples(self, t0_ns: int, t1_ns: int) -> list[SampleInterval]:
        intervals = []
        cursor = self.start_ns
        for segment in self.segments:
            seg_end = cursor + segment.duration_ms * 1_000_000
            lo, hi = max(cursor, t0_ns), min(seg_end, t1_ns)
            step = SAMPLE_PERIOD_MS * 1_000_000
            t = lo
            while t < hi:
                end = min(t + step, hi)
                intervals.append(
                    SampleInterval(
                        sample_start_ns=t,
                        sample_end_ns=end,
                        pkg_start_uj=self.cumulative_uj(t) % RANGE_UJ,
                        pkg_end_uj=self.cumulative_uj(end) % RANGE_UJ,
                    )
                )
                t = end
            cursor = seg_end
        return intervals


def _canonical_goal(suffix: str) -> Goal:
    return Goal(
        goal_id=f"canonical-{suffix}",
        task_id="gsm8k_basic",
        description="A box holds 6 eggs. How many eggs in 12 boxes?",
        evaluator=SuccessEvaluator(EvaluatorKind.INTEGER_EXACT),
        expected=72,
    )


def build_agentic_run(start_ns: int = 1_000_000_000) -> FixtureRun:
    kappa = AGENTIC_E_PKG_J / AGENTIC_E_ATTR_J  # raw package / attributed
    builder = _TraceBuilder(start_ns)
    builder.add_energy(1_000, AGENTIC_PRE_UJ, "pre")
    coord_power_w = (
        AGENTIC_COORDINATION_J * kappa / (sum(COORD_CHUNKS_MS) / 1e3)
    )
    builder.add_energy(RETRY_MS, AGENTIC_RETRY_J * kappa * 1e6, "retry")
    builder.add(COORD_CHUNKS_MS[0], coord_power_w, "coord0")
    builder.add_energy(PLANNING_MS, AGENTIC_PHASE_J["planning"] * kappa * 1e6, "planning")
    builder.add(COORD_CHUNKS_MS[1], coord_power_w, "coord1")
    builder.add_energy(EXECUTION_MS, AGENTIC_PHASE_J["execution"] * kappa * 1e6, "execution")
    builder.add(COORD_CHUNKS_MS[2], coord_power_w, "coord2")
    builder.add_energy(SYNTHESIS_MS, AGENTIC_PHASE_J["synthesis"] * kappa * 1e6, "synthesis")
    builder.add(COORD_CHUNKS_MS[3], coord_power_w, "coord3")
    builder.add_energy(2_000, AGENTIC_POST_UJ, "post")

    t_pre = builder.boundary_ns("pre")
    t0 = builder.boundary_ns("retry")
    t1 = builder.boundary_ns("post")
    t2 = builder.end_ns()

    phases = [
        PhaseWindow(
            Phase.PLANNING,
            builder.boundary_ns("planning"),
            builder.boundary_ns("planning", "end"),
            attempt_index=2,
        ),
        PhaseWindow(
            Phase.EXECUTION,
            builder.boundary_ns("execution"),
            builder.boundary_ns("execution", "end"),
            attempt_index=2,
        ),
        PhaseWindow(
            Phase.SYNTHESIS,
            builder.boundary_ns("synthesis"),
            builder.boundary_ns("synthesis", "end"),
            attempt_index=2,
        ),
    ]
    retry_end = builder.boundary_ns("retry", "end")
    attempts = [
        Attempt(index=1, outcome=Outcome.FAILURE_INJECTED, start_ns=t0, end_ns=retry_end),
        Attempt(
            index=2,
            outcome=Outcome.SUCCESS,
            start_ns=retry_end,
            end_ns=t1,
            phase_windows=list(phases),
        ),
    ]
    measurement = RunMeasurement(
        anchors=BoundaryAnchors(t_pre, t0, t1, t2),
        snap_pre=_snapshot(t_pre, builder.cumulative_uj(t_pre)),
        snap_t0=_snapshot(t0, builder.cumulative_uj(t0)),
        snap_t1=_snapshot(t1, builder.cumulative_uj(t1)),
        snap_t2=_snapshot(t2, builder.cumulative_uj(t2)),
        intervals=builder.samples(t0, t1),
        drop_count=0,
        ticks=CpuTickDelta(*AGENTIC_TICKS),
        range_uj=RANGE_UJ,
    )
    unit = WorkflowUnit(
        goal=_canonical_goal("agentic"),
        workflow_type=WorkflowType.AGENTIC,
        attempts=attempts,
        final_success=True,
        measurement=measurement,
    )
    return FixtureRun(
        run_id="run-canonical-agentic",
        workflow_type=WorkflowType.AGENTIC,
        unit=unit,
        measurement=measurement,
        phases=phases,
        failed_windows=[(t0, retry_end)],
    )


def build_linear_run(start_ns: int = 200_000_000_000) -> FixtureRun:
    window_s = LINEAR_WINDOW_MS / 1e3
    e_pkg_j = LINEAR_E_DYN_J + BASELINE_POWER_W * window_s
    builder = _TraceBuilder(start_ns)
    builder.add_energy(500, LINEAR_PRE_UJ, "pre")
    builder.add_energy(LINEAR_WINDOW_MS, e_pkg_j * 1e6, "execution")
    builder.add_energy(500, LINEAR_POST_UJ, "post")

    t_pre = builder.boundary_ns("pre")
    t0 = builder.boundary_ns("execution")
    t1 = builder.boundary_ns("execution", "end")
    t2 = builder.end_ns()
    phases = [PhaseWindow(Phase.EXECUTION, t0, t1, attempt_index=1)]
    attempts = [
        Attempt(
            index=1,
            outcome=Outcome.SUCCESS,
            start_ns=t0,
            end_ns=t1,
            phase_windows=list(phases),
        )
    ]
    measurement = RunMeasurement(
        anchors=BoundaryAnchors(t_pre, t0, t1, t2),
        snap_pre=_snapshot(t_pre, builder.cumulative_uj(t_pre)),
        snap_t0=_snapshot(t0, builder.cumulative_uj(t0)),
        snap_t1=_snapshot(t1, builder.cumulative_uj(t1)),
        snap_t2=_snapshot(t2, builder.cumulative_uj(t2)),
        intervals=builder.samples(t0, t1),
        drop_count=0,
        ticks=CpuTickDelta(*LINEAR_TICKS),
        range_uj=RANGE_UJ,
    )
    unit = WorkflowUnit(
        goal=_canonical_goal("linear"),
        workflow_type=WorkflowType.LINEAR,
        attempts=attempts,
        final_success=True,
        measurement=measurement,
    )
    return FixtureRun(
        run_id="run-canonical-linear",
        workflow_type=WorkflowType.LINEAR,
        unit=unit,
        measurement=measurement,
        phases=phases,
        failed_windows=[],
    )


def build_canonical_pair() -> tuple[BaselineRecord, FixtureRun, FixtureRun]:
    return canonical_baseline(), build_agentic_run(), build_linear_run()


CANONICAL_EXP_ID = "exp-canonical"
CANONICAL_PAIR_KEY = "gsm8k_basic-r000"


def install_canonical_pair(store) -> str:
    """Persist the canonical pair into a store and run the ETL.

    Returns the experiment id; afterwards every derived column and
    report reflects the known layer values.
    """
    baseline, agentic, linear = build_canonical_pair()
    store.insert_baseline(baseline)
    store.insert_experiment(
        CANONICAL_EXP_ID, "failure_injection", "", "unknown", "unknown", "unknown"
    )
    for fixture in (agentic, linear):
        store.insert_unit(
            CANONICAL_EXP_ID,
            fixture.run_id,
            f"{CANONICAL_EXP_ID}-{CANONICAL_PAIR_KEY}-{fixture.workflow_type.value}",
            CANONICAL_PAIR_KEY,
            fixture.unit,
            baseline.baseline_id,
        )
    store.etl_run(CANONICAL_EXP_ID)
    return CANONICAL_EXP_ID
