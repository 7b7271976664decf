"""Measurement harnesses: anchor capture around workflow execution.

The live harness wraps real execution: it snapshots the counters at
the four anchors, runs the interval sampler on its own thread, and
reads /proc CPU ticks at the attribution boundaries. The simulated
harness drives everything off a manual clock against a synthetic
source, synthesizing the sample stream post-hoc, so experiment replays
are instant and bit-reproducible.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass

from .attribution import (
    CpuTickDelta,
    Phase,
    PhaseWindow,
    read_pid_ticks,
    read_total_ticks,
)
from .boundary import BoundaryAnchors, WindowEnergy, window_energy
from .counters import (
    CounterDomain,
    CounterSnapshot,
    CounterSource,
    ManualClock,
    SyntheticSource,
)
from .errors import GoalMeterError
from .sampler import SampleInterval, start_sampling, stop_and_drain

TICK_NS = 10_000_000  # one USER_HZ tick: 10 ms


class HarnessStateError(GoalMeterError):
    pass


@dataclass
class RunMeasurement:
    """Everything the ETL needs to attribute one run."""

    anchors: BoundaryAnchors
    snap_pre: CounterSnapshot
    snap_t0: CounterSnapshot
    snap_t1: CounterSnapshot
    snap_t2: CounterSnapshot
    intervals: list[SampleInterval]
    drop_count: int
    ticks: CpuTickDelta
    range_uj: float

    def window(self) -> WindowEnergy:
        return window_energy(self.snap_pre, self.snap_t0, self.snap_t1, self.snap_t2)


class _InjectedAbortSignal(Exception):
    pass


class AttemptContext:
    """Per-attempt recording surface handed to executors."""

    def __init__(
        self,
        harness,
        attempt_index: int,
        timeout_s: float,
        abort_after_s: float | None = None,
    ) -> None:
        self._harness = harness
        self.attempt_index = attempt_index
        self.timeout_s = timeout_s
        self.abort_after_s = abort_after_s
        self.phase_windows: list[PhaseWindow] = []
        self._open: dict[Phase, int] = {}
        self._work_done_s = 0.0

    @property
    def clock(self):
        return self._harness.clock

    def now_ns(self) -> int:
        return self._harness.now_ns()

    def open_phase(self, phase: Phase) -> None:
        if phase in self._open:
            raise HarnessStateError(f"phase {phase.value} already open")
        self._open[phase] = self.now_ns()

    def close_phase(self, phase: Phase) -> None:
        start_ns = self._open.pop(phase, None)
        if start_ns is None:
            return
        end_ns = max(self.now_ns(), start_ns + 1)
        self.phase_windows.append(
            PhaseWindow(
                phase=phase,
                start_ns=start_ns,
                end_ns=end_ns,
                attempt_index=self.attempt_index,
            )
        )

    @contextmanager
    def phase(self, phase: Phase):
        self.open_phase(phase)
        try:
            yield self
        finally:
            self.close_phase(phase)

    def work(self, duration_s: float, intensity: float = 1.0) -> None:
        """Advance or burn through `duration_s` of workload.

        Raises the injected-abort signal mid-workload when the attempt
        was scheduled to fail partway through its work.
        """
        if self.abort_after_s is not None:
            remaining_budget = self.abort_after_s - self._work_done_s
            if duration_s >= remaining_budget:
                if remaining_budget > 0:
                    self._harness.perform_work(remaining_budget, intensity)
                    self._work_done_s += remaining_budget
                raise _InjectedAbortSignal
        self._harness.perform_work(duration_s, intensity)
        self._work_done_s += duration_s


def attempt_abort_signal() -> type[Exception]:
    return _InjectedAbortSignal


# deterministic LCG block so burned CPU time is real but repeatable
def _burn_block(state: int) -> int:
    for _ in range(4096):
        state = (state * 1103515245 + 12345) % 2147483648
    return state


class LiveHarness:
    """Real-time measurement around in-process or subprocess workloads."""

    def __init__(
        self,
        src: CounterSource,
        target_hz: float = 100.0,
        buffer_capacity: int = 8192,
        pid: int | None = None,
    ) -> None:
        self.src = src
        self.clock = src.clock
        self.target_hz = target_hz
        self.buffer_capacity = buffer_capacity
        self.pid = pid if pid is not None else os.getpid()
        self._active = False
        self._snap_pre: CounterSnapshot | None = None
        self._snap_t0: CounterSnapshot | None = None
        self._ticks_t0: tuple[int, int] | None = None
        self._sampler = None

    def now_ns(self) -> int:
        return self.clock.now_ns()

    def begin_unit(self) -> None:
        if self._active:
            raise HarnessStateError("unit already in progress")
        self._active = True
        self._snap_pre = self.src.read_snapshot()
        self._sampler = start_sampling(self.src, self.target_hz, self.buffer_capacity)
        self._ticks_t0 = (read_pid_ticks(self.pid), read_total_ticks())
        self._snap_t0 = self.src.read_snapshot()

    def attempt_context(
        self, index: int, timeout_s: float = 120.0, abort_after_s: float | None = None
    ) -> AttemptContext:
        if not self._active:
            raise HarnessStateError("no unit in progress")
        return AttemptContext(self, index, timeout_s, abort_after_s)

    def perform_work(self, duration_s: float, intensity: float = 1.0) -> None:
        """Burn a deterministic compute kernel at the given duty cycle."""
        end_ns = self.now_ns() + int(duration_s * 1e9)
        state = 1
        slot_s = 0.010
        while self.now_ns() < end_ns:
            if intensity >= 0.999:
                state = _burn_block(state)
                continue
            busy_until = min(self.now_ns() + int(slot_s * intensity * 1e9), end_ns)
            while self.now_ns() < busy_until:
                state = _burn_block(state)
            idle_s = min(
                slot_s * (1.0 - intensity), max(end_ns - self.now_ns(), 0) / 1e9
            )
            self.clock.sleep(idle_s)

    def end_unit(self) -> RunMeasurement:
        if not self._active:
            raise HarnessStateError("no unit in progress")
        snap_t1 = self.src.read_snapshot()
        pid_t1, total_t1 = read_pid_ticks(self.pid), read_total_ticks()
        intervals, drops = stop_and_drain(self._sampler)
        snap_t2 = self.src.read_snapshot()
        pid_t0, total_t0 = self._ticks_t0
        measurement = RunMeasurement(
            anchors=BoundaryAnchors(
                self._snap_pre.timestamp_ns,
                self._snap_t0.timestamp_ns,
                snap_t1.timestamp_ns,
                snap_t2.timestamp_ns,
            ),
            snap_pre=self._snap_pre,
            snap_t0=self._snap_t0,
            snap_t1=snap_t1,
            snap_t2=snap_t2,
            intervals=intervals,
            drop_count=drops,
            ticks=CpuTickDelta.from_counts(pid_t1 - pid_t0, total_t1 - total_t0),
            range_uj=self._snap_t0.max_range_uj[CounterDomain.PACKAGE],
        )
        self._active = False
        self._sampler = None
        return measurement

    def cool_down(self, seconds: float) -> None:
        self.clock.sleep(seconds)


class SimulatedHarness:
    """Deterministic replay harness over a synthetic source.

    Runs on the source's manual clock: executor work advances simulated
    time instead of burning CPU, the per-interval sample stream is
    synthesized over [t0, t1] after the fact, and CPU ticks derive from
    the executors' busy time, so two invocations with the same seed are
    bit-identical.
    """

    def __init__(
        self,
        src: SyntheticSource,
        target_hz: float = 100.0,
        pre_window_s: float = 0.2,
        post_window_s: float = 0.2,
    ) -> None:
        if not src.is_synthetic or not isinstance(src.clock, ManualClock):
            raise ValueError("simulated harness needs a synthetic source on a manual clock")
        self.src = src
        self.clock = src.clock
        self.period_ns = int(round(1e9 / target_hz))
        self.pre_window_s = pre_window_s
        self.post_window_s = post_window_s
        self._active = False
        self._busy_ns = 0
        self._snap_pre: CounterSnapshot | None = None
        self._snap_t0: CounterSnapshot | None = None

    def now_ns(self) -> int:
        return self.clock.now_ns()

    def begin_unit(self) -> None:
        if self._active:
            raise HarnessStateError("unit already in progress")
        self._active = True
        self._busy_ns = 0
        self._snap_pre = self.src.read_snapshot()
        self.clock.sleep(self.pre_window_s)
        self._snap_t0 = self.src.read_snapshot()

    def attempt_context(
        self, index: int, timeout_s: float = 120.0, abort_after_s: float | None = None
    ) -> AttemptContext:
        if not self._active:
            raise HarnessStateError("no unit in progress")
        return AttemptContext(self, index, timeout_s, abort_after_s)

    def perform_work(self, duration_s: float, intensity: float = 1.0) -> None:
        """Advance simulated time; when the source declares a busy power
        level, the package draw is raised for the duration of the work."""
        busy = self.src.busy_watts
        if busy is not None:
            idle = self.src.idle_watts
            self.src.set_power(idle + (busy - idle) * intensity)
        self.clock.sleep(duration_s)
        if busy is not None:
            self.src.set_power(self.src.idle_watts)
        self._busy_ns += int(duration_s * intensity * 1e9)

    def _synthesize_intervals(self, t0: int, t1: int) -> list[SampleInterval]:
        intervals = []
        cursor = t0
        while cursor < t1:
            end = min(cursor + self.period_ns, t1)
            a = self.src.snapshot_at(cursor)
            b = self.src.snapshot_at(end)
            intervals.append(
                SampleInterval(
                    sample_start_ns=cursor,
                    sample_end_ns=end,
                    pkg_start_uj=a.cumulative_uj[CounterDomain.PACKAGE],
                    pkg_end_uj=b.cumulative_uj[CounterDomain.PACKAGE],
                )
            )
            cursor = end
        return intervals

    def end_unit(self) -> RunMeasurement:
        if not self._active:
            raise HarnessStateError("no unit in progress")
        snap_t1 = self.src.read_snapshot()
        t0 = self._snap_t0.timestamp_ns
        t1 = snap_t1.timestamp_ns
        intervals = self._synthesize_intervals(t0, t1)
        self.clock.sleep(self.post_window_s)
        snap_t2 = self.src.read_snapshot()
        window_ns = max(t1 - t0, 1)
        total_ticks = max(window_ns // TICK_NS, 1)
        pid_ticks = min(round(total_ticks * self._busy_ns / window_ns), total_ticks)
        measurement = RunMeasurement(
            anchors=BoundaryAnchors(self._snap_pre.timestamp_ns, t0, t1, snap_t2.timestamp_ns),
            snap_pre=self._snap_pre,
            snap_t0=self._snap_t0,
            snap_t1=snap_t1,
            snap_t2=snap_t2,
            intervals=intervals,
            drop_count=0,
            ticks=CpuTickDelta.from_counts(int(pid_ticks), int(total_ticks)),
            range_uj=self._snap_t0.max_range_uj[CounterDomain.PACKAGE],
        )
        self._active = False
        return measurement

    def cool_down(self, seconds: float) -> None:
        self.clock.sleep(seconds)


def pick_harness(src: CounterSource, target_hz: float = 100.0):
    """Simulated harness for synthetic sources on manual clocks,
    live harness otherwise."""
    if src.is_synthetic and isinstance(src.clock, ManualClock):
        return SimulatedHarness(src, target_hz=target_hz)
    return LiveHarness(src, target_hz=target_hz)
