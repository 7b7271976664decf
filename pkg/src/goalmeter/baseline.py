"""Idle-power baseline estimation with single-pass 2-sigma rejection.

The baseline is measured over non-overlapping windows on an intended-idle
system. Window powers beyond two standard deviations of the pre-filter
mean are excluded once (not iterated) before averaging; the survivors'
mean becomes the reusable per-session baseline.
"""

from __future__ import annotations

import hashlib
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from .counters import CounterDomain, CounterSource, ManualClock, counter_delta
from .errors import GoalMeterError

GOVERNOR_PATH = Path("/sys/devices/system/cpu/cpu0/cpufreq/scaling_governor")
NO_TURBO_PATH = Path("/sys/devices/system/cpu/intel_pstate/no_turbo")
BOOST_PATH = Path("/sys/devices/system/cpu/cpufreq/boost")


class AllWindowsRejected(GoalMeterError):
    """Pathological variance: every window fell outside the 2-sigma band."""


@dataclass(frozen=True)
class BaselineRecord:
    mean_power_w: float
    sigma_w: float
    n_windows_used: int
    n_windows_rejected: int
    window_s: float
    governor: str
    turbo: str
    affinity_pinned: bool
    created_at: str
    baseline_id: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not self.baseline_id:
            object.__setattr__(self, "baseline_id", self.content_hash())

    def content_hash(self) -> str:
        """16-hex content address over every stored field except the id."""
        lines = [
            f"affinity_pinned={str(self.affinity_pinned).lower()}",
            f"created_at={self.created_at}",
            f"governor={self.governor}",
            f"mean_power_w={self.mean_power_w!r}",
            f"n_windows_rejected={self.n_windows_rejected}",
            f"n_windows_used={self.n_windows_used}",
            f"sigma_w={self.sigma_w!r}",
            f"turbo={self.turbo}",
            f"window_s={self.window_s!r}",
        ]
        return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()[:16]


def read_governor() -> str:
    try:
        return GOVERNOR_PATH.read_text().strip() or "unknown"
    except OSError:
        return "unknown"


def read_turbo() -> str:
    try:
        return "disabled" if NO_TURBO_PATH.read_text().strip() == "1" else "enabled"
    except OSError:
        pass
    try:
        return "enabled" if BOOST_PATH.read_text().strip() == "1" else "disabled"
    except OSError:
        return "unknown"


def reject_outliers_2sigma(values: list[float]) -> tuple[list[float], float]:
    """Single-pass rejection of points beyond mean +/- 2 sigma.

    Returns (survivors, pre-filter sigma). Sigma is the population
    standard deviation; with one value it is 0 and nothing is rejected.
    """
    mean = sum(values) / len(values)
    sigma = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
    survivors = [v for v in values if abs(v - mean) <= 2.0 * sigma]
    return survivors, sigma


def _pin_affinity() -> tuple[bool, set[int] | None]:
    try:
        original = os.sched_getaffinity(0)
        os.sched_setaffinity(0, {min(original)})
        return True, original
    except (AttributeError, OSError):
        return False, None


def _restore_affinity(original: set[int] | None) -> None:
    if original is None:
        return
    try:
        os.sched_setaffinity(0, original)
    except OSError:
        pass


def measure_baseline(
    src: CounterSource, n_windows: int = 10, window_s: float = 10.0
) -> BaselineRecord:
    """Measure idle package power over `n_windows` non-overlapping windows.

    CPU affinity pinning is attempted for the duration (recorded, never
    fatal). Raises AllWindowsRejected if no window survives filtering.
    """
    if n_windows < 1:
        raise ValueError("n_windows must be >= 1")
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    pinned, original_affinity = _pin_affinity()
    try:
        powers = []
        for _ in range(n_windows):
            snap0 = src.read_snapshot()
            src.clock.sleep(window_s)
            snap1 = src.read_snapshot()
            elapsed_s = (snap1.timestamp_ns - snap0.timestamp_ns) / 1e9
            delta_uj = counter_delta(snap0, snap1, CounterDomain.PACKAGE)
            powers.append(delta_uj / 1e6 / elapsed_s)
    finally:
        _restore_affinity(original_affinity)

    survivors, _ = reject_outliers_2sigma(powers)
    if not survivors:
        raise AllWindowsRejected("no idle window survived 2-sigma filtering")
    mean = sum(survivors) / len(survivors)
    sigma = (
        math.sqrt(sum((v - mean) ** 2 for v in survivors) / len(survivors))
        if len(survivors) > 1
        else 0.0
    )
    if isinstance(src.clock, ManualClock):
        created_at = f"sim:{src.clock.now_ns() / 1e9:.6f}"
    else:
        created_at = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return BaselineRecord(
        mean_power_w=mean,
        sigma_w=sigma,
        n_windows_used=len(survivors),
        n_windows_rejected=len(powers) - len(survivors),
        window_s=window_s,
        governor=read_governor(),
        turbo=read_turbo(),
        affinity_pinned=pinned,
        created_at=created_at,
    )


def baseline_energy(rec: BaselineRecord, dt_s: float) -> float:
    """Idle energy in joules over a window of dt_s seconds."""
    if dt_s < 0:
        raise ValueError("dt_s must be non-negative")
    return rec.mean_power_w * dt_s
