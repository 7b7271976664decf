"""Energy-counter sources: Linux powercap (RAPL) and a synthetic backend.

A counter source exposes cumulative microjoule counters per domain
(package required, core/uncore/dram when present) together with the
wrap modulus of each counter. All timestamps come from a monotonic
clock owned by the source, so synthetic sources can run on a manual
clock for deterministic, instant replay.
"""

from __future__ import annotations

import hashlib
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import GoalMeterError

DEFAULT_POWERCAP_ROOT = "/sys/class/powercap/intel-rapl:0"

SYNTHETIC_RANGE_UJ = 2**32  # mirrors the typical hardware wrap modulus


class NoPermission(GoalMeterError):
    """Powercap files exist but are not readable by this process."""


class NoSuchDomain(GoalMeterError):
    """Requested counter domain is not exposed by the source."""


class ReadFailure(GoalMeterError):
    """Transient failure reading a counter; the caller may retry once."""


class DomainMismatch(GoalMeterError):
    """Snapshot pair does not carry the requested domain."""


class CounterDomain(str, Enum):
    PACKAGE = "package"
    CORE = "core"
    UNCORE = "uncore"
    DRAM = "dram"


class MonotonicClock:
    """Wall clock: monotonic nanoseconds plus real sleeping."""

    def now_ns(self) -> int:
        return time.monotonic_ns()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class ManualClock:
    """Deterministic clock for simulated runs; sleep() advances it."""

    def __init__(self, start_ns: int = 0) -> None:
        self._now_ns = start_ns

    def now_ns(self) -> int:
        return self._now_ns

    def sleep(self, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("cannot sleep a negative duration")
        self._now_ns += int(round(seconds * 1e9))

    def advance_ns(self, ns: int) -> None:
        self._now_ns += ns


@dataclass(frozen=True)
class CounterSnapshot:
    """One read of all counters of a source at a monotonic instant."""

    timestamp_ns: int
    cumulative_uj: dict[CounterDomain, float]
    max_range_uj: dict[CounterDomain, float]

    def __post_init__(self) -> None:
        for domain, value in self.cumulative_uj.items():
            if value >= self.max_range_uj[domain]:
                raise ValueError(
                    f"counter value {value} exceeds wrap range for {domain.value}"
                )


class CounterSource:
    """Contract for counter backends.

    Subclasses fill `identity`, `domains`, `clock` and implement
    `read_snapshot`. Successive snapshots have non-decreasing
    timestamps; a source is used by one reader at a time.
    """

    identity: str
    domains: frozenset[CounterDomain]
    clock: MonotonicClock | ManualClock

    def read_snapshot(self) -> CounterSnapshot:
        raise NotImplementedError

    @property
    def is_synthetic(self) -> bool:
        return False


@dataclass(frozen=True)
class PowerSegment:
    duration_s: float  # non-positive duration means "until forever"
    watts: float


class SyntheticSource(CounterSource):
    """Deterministic source driven by a piecewise-constant power profile.

    The counter starts at a seed-derived offset (so wraparound paths get
    exercised) and advances by the exact integral of the power profile
    over elapsed clock time: a 10 W segment advances 10 000 uJ per
    millisecond. The profile is a transition log seeded from the
    configured schedule (whose final segment extends indefinitely);
    simulated workloads may append transitions via set_power to model
    busy/idle draw.
    """

    def __init__(
        self,
        schedule: list[PowerSegment],
        seed: int = 0,
        clock: MonotonicClock | ManualClock | None = None,
        busy_watts: float | None = None,
    ) -> None:
        if not schedule:
            raise ValueError("schedule must contain at least one segment")
        if any(seg.watts < 0 for seg in schedule):
            raise ValueError("power must be non-negative")
        self.schedule = list(schedule)
        self.seed = seed
        self.clock = clock if clock is not None else MonotonicClock()
        self.domains = frozenset({CounterDomain.PACKAGE})
        self._epoch_ns = self.clock.now_ns()
        self._offset_uj = random.Random(seed).randrange(SYNTHETIC_RANGE_UJ)
        self._transitions: list[tuple[int, float]] = []  # (elapsed_ns, watts)
        cursor_ns = 0
        for segment in schedule[:-1]:
            self._transitions.append((cursor_ns, segment.watts))
            cursor_ns += int(segment.duration_s * 1e9)
        self._transitions.append((cursor_ns, schedule[-1].watts))
        self.idle_watts = schedule[-1].watts
        self.busy_watts = busy_watts
        sched_id = hashlib.sha256(
            ",".join(f"{s.duration_s}:{s.watts}" for s in schedule).encode()
        ).hexdigest()[:8]
        self.identity = f"synthetic:seed={seed}:schedule={sched_id}:busy={busy_watts}"

    @property
    def is_synthetic(self) -> bool:
        return True

    def set_power(self, watts: float) -> None:
        """Append a power transition at the current clock instant."""
        if watts < 0:
            raise ValueError("power must be non-negative")
        elapsed_ns = self.clock.now_ns() - self._epoch_ns
        if elapsed_ns < self._transitions[-1][0]:
            raise ValueError("power transitions must be time-ordered")
        if elapsed_ns == self._transitions[-1][0]:
            self._transitions[-1] = (elapsed_ns, watts)
        else:
            self._transitions.append((elapsed_ns, watts))

    def energy_uj_at(self, elapsed_ns: int) -> float:
        """Exact profile integral from the source epoch, in microjoules."""
        if elapsed_ns < 0:
            raise ValueError("elapsed time precedes source epoch")
        total_uj = 0.0
        for (t_ns, watts), nxt in zip(
            self._transitions, self._transitions[1:] + [(elapsed_ns, 0.0)]
        ):
            hi = min(elapsed_ns, nxt[0])
            if hi > t_ns:
                total_uj += watts * (hi - t_ns) / 1e3  # W * ns -> uJ
            if nxt[0] >= elapsed_ns:
                break
        return total_uj

    def snapshot_at(self, timestamp_ns: int) -> CounterSnapshot:
        """Snapshot for an arbitrary instant; used by simulated replay."""
        raw = self._offset_uj + self.energy_uj_at(timestamp_ns - self._epoch_ns)
        return CounterSnapshot(
            timestamp_ns=timestamp_ns,
            cumulative_uj={CounterDomain.PACKAGE: raw % SYNTHETIC_RANGE_UJ},
            max_range_uj={CounterDomain.PACKAGE: float(SYNTHETIC_RANGE_UJ)},
        )

    def read_snapshot(self) -> CounterSnapshot:
        return self.snapshot_at(self.clock.now_ns())


_POWERCAP_SUBDOMAIN_NAMES = {
    "core": CounterDomain.CORE,
    "uncore": CounterDomain.UNCORE,
    "dram": CounterDomain.DRAM,
}


class PowercapSource(CounterSource):
    """Linux powercap sysfs backend.

    Reads `<root>/energy_uj` for the package domain and any child
    `<root>:<n>` directories whose name file is core/uncore/dram.
    Only the package domain is required; sub-domains are recorded when
    present.
    """

    def __init__(self, root: str | Path = DEFAULT_POWERCAP_ROOT) -> None:
        self.root = Path(root)
        self.clock = MonotonicClock()
        if not self.root.is_dir() or not (self.root / "energy_uj").exists():
            raise NoSuchDomain(f"no powercap package domain at {self.root}")
        self._files: dict[CounterDomain, Path] = {}
        self._ranges: dict[CounterDomain, float] = {}
        self._attach(CounterDomain.PACKAGE, self.root)
        for child in sorted(self.root.glob(f"{self.root.name}:*")):
            try:
                name = (child / "name").read_text().strip()
            except OSError:
                continue
            domain = _POWERCAP_SUBDOMAIN_NAMES.get(name)
            if domain is not None and (child / "energy_uj").exists():
                self._attach(domain, child)
        self.domains = frozenset(self._files)
        self.identity = f"powercap:{self.root}"

    def _attach(self, domain: CounterDomain, directory: Path) -> None:
        energy = directory / "energy_uj"
        try:
            energy.read_text()
        except PermissionError as exc:
            raise NoPermission(f"cannot read {energy}") from exc
        except OSError as exc:
            raise NoSuchDomain(f"cannot open {energy}") from exc
        try:
            max_range = float((directory / "max_energy_range_uj").read_text().strip())
        except OSError:
            max_range = float(2**63)
        self._files[domain] = energy
        self._ranges[domain] = max_range

    def read_snapshot(self) -> CounterSnapshot:
        timestamp_ns = self.clock.now_ns()
        values: dict[CounterDomain, float] = {}
        for domain, path in self._files.items():
            try:
                values[domain] = float(path.read_text().strip())
            except (OSError, ValueError) as exc:
                raise ReadFailure(f"transient read failure on {path}") from exc
        return CounterSnapshot(
            timestamp_ns=timestamp_ns,
            cumulative_uj=values,
            max_range_uj=dict(self._ranges),
        )


@dataclass
class SourceSpec:
    """Parsed source descriptor (see `open_source`)."""

    kind: str
    root: str = DEFAULT_POWERCAP_ROOT
    schedule: list[PowerSegment] = field(default_factory=list)
    seed: int = 0
    busy_watts: float | None = None


def parse_source_spec(spec: str | dict) -> SourceSpec:
    """Parse a source descriptor.

    String forms: "powercap", "powercap:<root>", "synthetic:<watts>",
    "synthetic:<watts>:<seed>". Dict form (from experiment configs):
    {"kind": "powercap", "root": ...} or
    {"kind": "synthetic", "watts": W | "schedule": [{"duration_s": d,
    "watts": W}, ...], "busy_watts": W, "seed": n}. busy_watts is the
    package draw while a simulated workload is executing; the schedule
    level is the idle draw.
    """
    if isinstance(spec, str):
        parts = spec.split(":")
        if parts[0] == "powercap":
            root = ":".join(parts[1:]) if len(parts) > 1 else DEFAULT_POWERCAP_ROOT
            return SourceSpec(kind="powercap", root=root)
        if parts[0] == "synthetic":
            watts = float(parts[1]) if len(parts) > 1 else 10.0
            seed = int(parts[2]) if len(parts) > 2 else 0
            return SourceSpec(
                kind="synthetic",
                schedule=[PowerSegment(duration_s=0.0, watts=watts)],
                seed=seed,
            )
        raise ValueError(f"unknown source spec {spec!r}")
    kind = spec.get("kind")
    if kind == "powercap":
        return SourceSpec(kind="powercap", root=spec.get("root", DEFAULT_POWERCAP_ROOT))
    if kind == "synthetic":
        if "schedule" in spec:
            schedule = [
                PowerSegment(duration_s=float(s["duration_s"]), watts=float(s["watts"]))
                for s in spec["schedule"]
            ]
        else:
            schedule = [PowerSegment(duration_s=0.0, watts=float(spec.get("watts", 10.0)))]
        busy = spec.get("busy_watts")
        return SourceSpec(
            kind="synthetic",
            schedule=schedule,
            seed=int(spec.get("seed", 0)),
            busy_watts=float(busy) if busy is not None else None,
        )
    raise ValueError(f"unknown source kind {kind!r}")


def open_source(
    spec: str | dict | SourceSpec,
    clock: MonotonicClock | ManualClock | None = None,
) -> CounterSource:
    """Open a counter source from a descriptor.

    Raises NoPermission when powercap exists but is unreadable (the run
    must fall back to synthetic or elevated privileges) and NoSuchDomain
    when the powercap root is absent.
    """
    if not isinstance(spec, SourceSpec):
        spec = parse_source_spec(spec)
    if spec.kind == "powercap":
        return PowercapSource(spec.root)
    return SyntheticSource(
        spec.schedule, seed=spec.seed, clock=clock, busy_watts=spec.busy_watts
    )


def counter_delta(
    start: CounterSnapshot,
    end: CounterSnapshot,
    domain: CounterDomain = CounterDomain.PACKAGE,
) -> float:
    """Wrap-corrected counter difference in microjoules; never negative.

    Recovers exactly one wraparound between the reads; a double wrap is
    undetectable at any realistic sampling cadence and is a documented
    limitation.
    """
    if domain not in start.cumulative_uj or domain not in end.cumulative_uj:
        raise DomainMismatch(f"domain {domain.value} missing from snapshot pair")
    if start.max_range_uj[domain] != end.max_range_uj[domain]:
        raise DomainMismatch(f"wrap range differs for {domain.value}")
    delta = end.cumulative_uj[domain] - start.cumulative_uj[domain]
    if delta < 0:
        # adding the modulus only on wrap keeps full float precision in
        # the common case (modulus may dwarf the counter values)
        delta += start.max_range_uj[domain]
    return delta
