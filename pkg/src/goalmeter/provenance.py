"""Three-hash provenance: hardware, environment, and run-state
fingerprints composed into a mismatch-diagnosis ladder.

Canonicalization is byte-exact so third parties can recompute every
digest: SHA-256 over the UTF-8 encoding of `key=value` lines sorted by
key and joined with a single LF, with no trailing newline. Probes that
fail record the literal "unknown" rather than omitting the key, so the
field count is fixed.
"""

from __future__ import annotations

import hashlib
import json
import platform
import subprocess
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from . import SCHEMA_VERSION, __version__
from .errors import GoalMeterError

SHORT_ID_LEN = 16

HW_KEYS = ("cpu_model", "kernel", "microcode", "rapl_domains")
ENV_KEYS = (
    "extra",
    "framework_version",
    "git_commit",
    "git_dirty",
    "os_name",
    "runtime_version",
    "schema_version",
)
RUN_KEYS = ("baseline_id", "governor", "h_env", "h_hw", "turbo")


class MissingField(GoalMeterError):
    pass


class Verdict(str, Enum):
    MATCH = "match"
    RUN_STATE_DRIFT = "run_state_drift"
    ENV_DRIFT = "env_drift"
    HW_DRIFT = "hw_drift"


def hash_fields(fields: dict[str, str], required_keys: tuple[str, ...]) -> str:
    """SHA-256 of the canonical byte string for one hash kind."""
    for key in required_keys:
        if key not in fields or fields[key] is None:
            raise MissingField(f"canonical field {key!r} missing")
    payload = "\n".join(f"{key}={fields[key]}" for key in sorted(required_keys))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class HardwareFields:
    cpu_model: str
    microcode: str
    kernel: str
    rapl_domains: tuple[str, ...]

    def canonical(self) -> dict[str, str]:
        return {
            "cpu_model": self.cpu_model,
            "kernel": self.kernel,
            "microcode": self.microcode,
            "rapl_domains": ",".join(sorted(self.rapl_domains)) or "unknown",
        }


@dataclass(frozen=True)
class EnvFields:
    runtime_version: str
    os_name: str
    git_commit: str
    git_dirty: bool
    framework_version: str
    schema_version: str
    extra: str = ""

    def canonical(self) -> dict[str, str]:
        return {
            "extra": self.extra,
            "framework_version": self.framework_version,
            "git_commit": self.git_commit,
            "git_dirty": "true" if self.git_dirty else "false",
            "os_name": self.os_name,
            "runtime_version": self.runtime_version,
            "schema_version": self.schema_version,
        }


@dataclass(frozen=True)
class RunFields:
    governor: str
    turbo: str
    h_hw: str
    h_env: str
    baseline_id: str

    def canonical(self) -> dict[str, str]:
        return {
            "baseline_id": self.baseline_id,
            "governor": self.governor,
            "h_env": self.h_env,
            "h_hw": self.h_hw,
            "turbo": self.turbo,
        }


@dataclass(frozen=True)
class ProvenanceRecord:
    hardware: HardwareFields
    environment: EnvFields
    run_state: RunFields
    h_hw: str
    h_env: str
    h_run: str

    @property
    def short_hw(self) -> str:
        return self.h_hw[:SHORT_ID_LEN]

    @property
    def short_env(self) -> str:
        return self.h_env[:SHORT_ID_LEN]

    @property
    def short_run(self) -> str:
        return self.h_run[:SHORT_ID_LEN]

    def to_json(self) -> str:
        doc = {
            "hardware": self.hardware.canonical(),
            "environment": self.environment.canonical(),
            "run_state": self.run_state.canonical(),
            "digests": {"h_hw": self.h_hw, "h_env": self.h_env, "h_run": self.h_run},
            "short_ids": {
                "h_hw": self.short_hw,
                "h_env": self.short_env,
                "h_run": self.short_run,
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProvenanceRecord":
        doc = json.loads(text)
        hw = doc["hardware"]
        env = doc["environment"]
        run = doc["run_state"]
        return cls(
            hardware=HardwareFields(
                cpu_model=hw["cpu_model"],
                microcode=hw["microcode"],
                kernel=hw["kernel"],
                rapl_domains=tuple(hw["rapl_domains"].split(",")),
            ),
            environment=EnvFields(
                runtime_version=env["runtime_version"],
                os_name=env["os_name"],
                git_commit=env["git_commit"],
                git_dirty=env["git_dirty"] == "true",
                framework_version=env["framework_version"],
                schema_version=env["schema_version"],
                extra=env.get("extra", ""),
            ),
            run_state=RunFields(
                governor=run["governor"],
                turbo=run["turbo"],
                h_hw=run["h_hw"],
                h_env=run["h_env"],
                baseline_id=run["baseline_id"],
            ),
            h_hw=doc["digests"]["h_hw"],
            h_env=doc["digests"]["h_env"],
            h_run=doc["digests"]["h_run"],
        )


def build_record(
    hardware: HardwareFields, environment: EnvFields, governor: str, turbo: str,
    baseline_id: str,
) -> ProvenanceRecord:
    """Compose the three hashes; h_run includes h_hw and h_env
    transitively, so any lower-level change propagates upward."""
    h_hw = hash_fields(hardware.canonical(), HW_KEYS)
    h_env = hash_fields(environment.canonical(), ENV_KEYS)
    run_state = RunFields(
        governor=governor,
        turbo=turbo,
        h_hw=h_hw,
        h_env=h_env,
        baseline_id=baseline_id,
    )
    h_run = hash_fields(run_state.canonical(), RUN_KEYS)
    return ProvenanceRecord(
        hardware=hardware,
        environment=environment,
        run_state=run_state,
        h_hw=h_hw,
        h_env=h_env,
        h_run=h_run,
    )


def _cpuinfo_field(label: str) -> str:
    try:
        for line in Path("/proc/cpuinfo").read_text().splitlines():
            if line.lower().startswith(label):
                return line.split(":", 1)[1].strip() or "unknown"
    except OSError:
        pass
    return "unknown"


def _probe_rapl_domains(powercap_root: str) -> tuple[str, ...]:
    root = Path(powercap_root)
    if not (root / "energy_uj").exists():
        return ("unknown",)
    domains = ["package"]
    for child in sorted(root.glob(f"{root.name}:*")):
        try:
            domains.append((child / "name").read_text().strip())
        except OSError:
            continue
    return tuple(sorted(domains))


def _probe_git() -> tuple[str, bool]:
    try:
        commit = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True, text=True, timeout=5, check=True,
        ).stdout.strip()
        status = subprocess.run(
            ["git", "status", "--porcelain"],
            capture_output=True, text=True, timeout=5, check=True,
        ).stdout
        return commit, bool(status.strip())
    except (OSError, subprocess.SubprocessError):
        return "unknown", False


def capture_hardware(
    powercap_root: str = "/sys/class/powercap/intel-rapl:0",
) -> HardwareFields:
    return HardwareFields(
        cpu_model=_cpuinfo_field("model name"),
        microcode=_cpuinfo_field("microcode"),
        kernel=platform.release() or "unknown",
        rapl_domains=_probe_rapl_domains(powercap_root),
    )


def capture_env(extra: str = "") -> EnvFields:
    commit, dirty = _probe_git()
    return EnvFields(
        runtime_version=f"python-{platform.python_version()}",
        os_name=platform.system() or "unknown",
        git_commit=commit,
        git_dirty=dirty,
        framework_version=__version__,
        schema_version=SCHEMA_VERSION,
        extra=extra,
    )


def capture_provenance(
    governor: str = "unknown",
    turbo: str = "unknown",
    baseline_id: str = "unknown",
    extra: str = "",
) -> ProvenanceRecord:
    """Capture all probe-able fields; failed probes degrade to
    "unknown" and still participate in the hashes, so records stay
    stable across runs on the same host."""
    return build_record(
        hardware=capture_hardware(),
        environment=capture_env(extra=extra),
        governor=governor,
        turbo=turbo,
        baseline_id=baseline_id,
    )


def diagnose(
    a: ProvenanceRecord, b: ProvenanceRecord
) -> tuple[Verdict, list[str]]:
    """Walk the ladder: the FIRST differing hash in the order
    h_hw -> h_env -> h_run names the verdict, and the differing raw
    fields of that level are listed."""
    if a.h_hw != b.h_hw:
        fields = _differing(a.hardware.canonical(), b.hardware.canonical())
        return Verdict.HW_DRIFT, fields
    if a.h_env != b.h_env:
        fields = _differing(a.environment.canonical(), b.environment.canonical())
        return Verdict.ENV_DRIFT, fields
    if a.h_run != b.h_run:
        fields = _differing(
            {k: v for k, v in a.run_state.canonical().items() if not k.startswith("h_")},
            {k: v for k, v in b.run_state.canonical().items() if not k.startswith("h_")},
        )
        return Verdict.RUN_STATE_DRIFT, fields
    return Verdict.MATCH, []


def _differing(a: dict[str, str], b: dict[str, str]) -> list[str]:
    return sorted(k for k in a if a.get(k) != b.get(k))
