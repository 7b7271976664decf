"""100 Hz interval sampler with a bounded oldest-drop buffer.

Each tick performs two counter reads (interval start and end) so a
dropped sample loses coverage but never corrupts a neighbour. The
producer runs on its own thread and never blocks: when the buffer is
full the oldest interval is discarded and a drop counter increments.
"""

from __future__ import annotations

import json
import threading
from collections import deque
from dataclasses import asdict, dataclass

from .counters import CounterDomain, CounterSource, ReadFailure
from .errors import GoalMeterError

DEFAULT_TARGET_HZ = 100.0
DEFAULT_BUFFER_CAPACITY = 8192
CADENCE_BAND_MS = (5.0, 15.0)


class AlreadySampling(GoalMeterError):
    pass


class TooFewSamples(GoalMeterError):
    pass


@dataclass(frozen=True)
class SampleInterval:
    """One timestamped energy-counter interval (the raw signal stream)."""

    sample_start_ns: int
    sample_end_ns: int
    pkg_start_uj: float
    pkg_end_uj: float
    missed: bool = False


@dataclass(frozen=True)
class SamplerStats:
    n_samples: int
    mean_interval_ms: float
    pct_within_band: float
    max_gap_ms: float
    effective_rate_hz: float


def interval_energy_uj(interval: SampleInterval, range_uj: float) -> float:
    """Wrap-corrected package energy of one interval; 0 for missed ones."""
    if interval.missed:
        return 0.0
    delta = interval.pkg_end_uj - interval.pkg_start_uj
    if delta < 0:
        delta += range_uj
    return delta


class OldestDropBuffer:
    """Bounded SPSC buffer that discards the oldest entry when full.

    The retained set is always a suffix of the produced sequence.
    """

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self._items: deque[SampleInterval] = deque()
        self._capacity = capacity
        self._drops = 0
        self._lock = threading.Lock()

    def append(self, item: SampleInterval) -> None:
        with self._lock:
            if len(self._items) == self._capacity:
                self._items.popleft()
                self._drops += 1
            self._items.append(item)

    def drain(self) -> tuple[list[SampleInterval], int]:
        with self._lock:
            items = list(self._items)
            self._items.clear()
            return items, self._drops

    @property
    def drop_count(self) -> int:
        with self._lock:
            return self._drops


class SamplerHandle:
    """Owns the producer thread for one sampling session."""

    def __init__(self, src: CounterSource, target_hz: float, buffer_capacity: int) -> None:
        if target_hz <= 0:
            raise ValueError("target_hz must be positive")
        self.src = src
        self.period_ns = int(round(1e9 / target_hz))
        self.buffer = OldestDropBuffer(buffer_capacity)
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._started = False

    @property
    def range_uj(self) -> float:
        probe = self.src.read_snapshot()
        return probe.max_range_uj[CounterDomain.PACKAGE]

    def start(self) -> None:
        if self._started:
            raise AlreadySampling("sampler already started on this handle")
        self._started = True
        self._thread = threading.Thread(target=self._run, name="goalmeter-sampler", daemon=True)
        self._thread.start()

    def _read_with_retry(self):
        try:
            return self.src.read_snapshot()
        except ReadFailure:
            try:
                return self.src.read_snapshot()
            except ReadFailure:
                return None

    def _run(self) -> None:
        clock = self.src.clock
        while not self._stop.is_set():
            # each tick re-anchors to its own start: a scheduler stall
            # costs one long gap instead of a burst of catch-up ticks
            start_ns = clock.now_ns()
            snap_start = self._read_with_retry()
            end_target_ns = start_ns + self.period_ns
            remaining = end_target_ns - clock.now_ns()
            if remaining > 0:
                clock.sleep(remaining / 1e9)
            snap_end = self._read_with_retry()
            if snap_start is None or snap_end is None:
                # a second sysfs failure records a missed sample instead of blocking
                self.buffer.append(
                    SampleInterval(
                        sample_start_ns=start_ns,
                        sample_end_ns=max(clock.now_ns(), start_ns + 1),
                        pkg_start_uj=0.0,
                        pkg_end_uj=0.0,
                        missed=True,
                    )
                )
            else:
                self.buffer.append(
                    SampleInterval(
                        sample_start_ns=snap_start.timestamp_ns,
                        sample_end_ns=snap_end.timestamp_ns,
                        pkg_start_uj=snap_start.cumulative_uj[CounterDomain.PACKAGE],
                        pkg_end_uj=snap_end.cumulative_uj[CounterDomain.PACKAGE],
                    )
                )

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()


def start_sampling(
    src: CounterSource,
    target_hz: float = DEFAULT_TARGET_HZ,
    buffer_capacity: int = DEFAULT_BUFFER_CAPACITY,
) -> SamplerHandle:
    handle = SamplerHandle(src, target_hz, buffer_capacity)
    handle.start()
    return handle


def stop_and_drain(handle: SamplerHandle) -> tuple[list[SampleInterval], int]:
    """Stop the producer, then drain: intervals in timestamp order."""
    handle.stop()
    intervals, drops = handle.buffer.drain()
    intervals.sort(key=lambda i: i.sample_start_ns)
    return intervals, drops


def cadence_stats(intervals: list[SampleInterval]) -> SamplerStats:
    """Statistics over consecutive start-to-start gaps."""
    if len(intervals) < 2:
        raise TooFewSamples("need at least two intervals for cadence statistics")
    gaps_ms = [
        (b.sample_start_ns - a.sample_start_ns) / 1e6
        for a, b in zip(intervals, intervals[1:])
    ]
    lo, hi = CADENCE_BAND_MS
    in_band = sum(1 for g in gaps_ms if lo <= g <= hi)
    mean_ms = sum(gaps_ms) / len(gaps_ms)
    return SamplerStats(
        n_samples=len(intervals),
        mean_interval_ms=mean_ms,
        pct_within_band=100.0 * in_band / len(gaps_ms),
        max_gap_ms=max(gaps_ms),
        effective_rate_hz=1e3 / mean_ms if mean_ms > 0 else 0.0,
    )


def samples_to_jsonl(intervals: list[SampleInterval], run_id: str) -> str:
    """One JSON object per line: the SampleInterval fields plus run_id."""
    lines = []
    for interval in intervals:
        record = {"run_id": run_id}
        record.update(asdict(interval))
        lines.append(json.dumps(record, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def samples_from_jsonl(text: str) -> list[tuple[str, SampleInterval]]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        run_id = record.pop("run_id")
        out.append((run_id, SampleInterval(**record)))
    return out
