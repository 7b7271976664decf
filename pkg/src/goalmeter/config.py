"""Experiment configuration: a strict YAML key tree.

Unknown keys are errors at every level: a silently ignored typo in an
experiment config corrupts a measurement campaign. Parse failures
carry line/column positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .attribution import Phase
from .counters import SourceSpec, parse_source_spec
from .errors import GoalMeterError
from .workflow import (
    Executor,
    ExternalCommandExecutor,
    FailureInjection,
    PhaseSpec,
    RetryPolicy,
    SyntheticExecutor,
)


class ConfigError(GoalMeterError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


_SCHEMA: dict[str, set[str]] = {
    "": {"study", "tasks", "execution", "retry_policy", "failure_injection",
         "executors", "source", "seed"},
    "study": {"name", "experiment_type", "experiment_goal"},
    "execution": {"repetitions", "cool_down_seconds", "save_db"},
    "retry_policy": {"max_retries", "retry_on_timeout", "retry_on_tool_error",
                     "retry_on_api_error", "timeout_s"},
    "failure_injection": {"enabled", "tool_failure_rate", "timeout_rate", "seed",
                          "failure_point"},
    "executors": {"agentic", "linear"},
    "executors.*": {"kind", "phases", "cpu_share", "argv"},
    "executors.*.phases[]": {"name", "duration_s", "intensity"},
    "tasks[]": {"id"},
    "source": {"kind", "root", "watts", "busy_watts", "schedule", "seed"},
    "source.schedule[]": {"duration_s", "watts"},
}


@dataclass
class StudySection:
    name: str = "unnamed"
    experiment_type: str = "normal"
    experiment_goal: str = ""


@dataclass
class ExecutionSection:
    repetitions: int = 1
    cool_down_seconds: float = 30.0
    save_db: bool = True


@dataclass
class ExperimentConfig:
    study: StudySection
    tasks: list[str]
    execution: ExecutionSection
    retry_policy: RetryPolicy
    failure_injection: FailureInjection
    executors: dict[str, Executor]
    source: SourceSpec
    seed: int
    raw_text: str = field(default="", repr=False)


def _check_keys(mapping: dict, schema_key: str, path: str) -> None:
    allowed = _SCHEMA[schema_key]
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} under {path or 'top level'};"
            f" allowed: {sorted(allowed)}"
        )


def _require_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path or 'top level'} must be a mapping")
    return value


def _parse_executor(name: str, mapping: dict) -> Executor:
    _check_keys(mapping, "executors.*", f"executors.{name}")
    kind = mapping.get("kind", f"synthetic_{name}")
    if kind == "external_command":
        argv = mapping.get("argv")
        if not argv:
            raise ConfigError(f"executors.{name}: external_command requires argv")
        return ExternalCommandExecutor([str(a) for a in argv])
    phases = []
    for i, raw in enumerate(mapping.get("phases", [])):
        entry = _require_mapping(raw, f"executors.{name}.phases[{i}]")
        _check_keys(entry, "executors.*.phases[]", f"executors.{name}.phases[{i}]")
        try:
            phase = Phase(entry["name"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(
                f"executors.{name}.phases[{i}]: name must be one of"
                f" {[p.value for p in Phase]}"
            ) from exc
        phases.append(
            PhaseSpec(
                phase=phase,
                duration_s=float(entry.get("duration_s", 0.1)),
                intensity=float(entry.get("intensity", 1.0)),
            )
        )
    if not phases:
        if kind == "synthetic_linear":
            phases = [PhaseSpec(Phase.EXECUTION, duration_s=0.5)]
        else:
            phases = [
                PhaseSpec(Phase.PLANNING, duration_s=0.5),
                PhaseSpec(Phase.EXECUTION, duration_s=0.3),
                PhaseSpec(Phase.SYNTHESIS, duration_s=0.2),
            ]
    return SyntheticExecutor(
        kind=kind, phases=phases, cpu_share=float(mapping.get("cpu_share", 1.0))
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config document; rejects unknown keys."""
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ConfigError(
            f"config parse error: {exc.problem}",
            line=mark.line + 1 if mark else None,
            column=mark.column + 1 if mark else None,
        ) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    if doc is None:
        doc = {}
    doc = _require_mapping(doc, "")
    _check_keys(doc, "", "")

    study_raw = _require_mapping(doc.get("study", {}), "study")
    _check_keys(study_raw, "study", "study")
    study = StudySection(
        name=str(study_raw.get("name", "unnamed")),
        experiment_type=str(study_raw.get("experiment_type", "normal")),
        experiment_goal=str(study_raw.get("experiment_goal", "")),
    )

    tasks = []
    raw_tasks = doc.get("tasks", [])
    if not isinstance(raw_tasks, list):
        raise ConfigError("tasks must be a list")
    for i, raw in enumerate(raw_tasks):
        entry = _require_mapping(raw, f"tasks[{i}]")
        _check_keys(entry, "tasks[]", f"tasks[{i}]")
        if "id" not in entry:
            raise ConfigError(f"tasks[{i}] missing required key 'id'")
        tasks.append(str(entry["id"]))

    execution_raw = _require_mapping(doc.get("execution", {}), "execution")
    _check_keys(execution_raw, "execution", "execution")
    execution = ExecutionSection(
        repetitions=int(execution_raw.get("repetitions", 1)),
        cool_down_seconds=float(execution_raw.get("cool_down_seconds", 30.0)),
        save_db=bool(execution_raw.get("save_db", True)),
    )
    if execution.repetitions < 0:
        raise ConfigError("execution.repetitions must be >= 0")

    policy_raw = _require_mapping(doc.get("retry_policy", {}), "retry_policy")
    _check_keys(policy_raw, "retry_policy", "retry_policy")
    policy = RetryPolicy(
        max_retries=int(policy_raw.get("max_retries", 5)),
        retry_on_timeout=bool(policy_raw.get("retry_on_timeout", True)),
        retry_on_tool_error=bool(policy_raw.get("retry_on_tool_error", True)),
        retry_on_api_error=bool(policy_raw.get("retry_on_api_error", True)),
        timeout_s=float(policy_raw.get("timeout_s", 120.0)),
    )

    injection_raw = _require_mapping(doc.get("failure_injection", {}), "failure_injection")
    _check_keys(injection_raw, "failure_injection", "failure_injection")
    seed = int(doc.get("seed", 42))
    injection = FailureInjection(
        enabled=bool(injection_raw.get("enabled", False)),
        tool_failure_rate=float(injection_raw.get("tool_failure_rate", 0.0)),
        timeout_rate=float(injection_raw.get("timeout_rate", 0.0)),
        seed=int(injection_raw.get("seed", seed)),
        failure_point=float(injection_raw.get("failure_point", 1.0)),
    )

    executors_raw = _require_mapping(doc.get("executors", {}), "executors")
    _check_keys(executors_raw, "executors", "executors")
    executors = {
        name: _parse_executor(name, _require_mapping(raw, f"executors.{name}"))
        for name, raw in executors_raw.items()
    }
    executors.setdefault("agentic", _parse_executor("agentic", {}))
    executors.setdefault("linear", _parse_executor("linear", {}))

    source_raw = doc.get("source", {"kind": "synthetic", "watts": 10.0, "seed": seed})
    if isinstance(source_raw, dict):
        _check_keys(source_raw, "source", "source")
        if source_raw.get("kind") == "synthetic" and "schedule" in source_raw:
            for i, raw in enumerate(source_raw["schedule"]):
                entry = _require_mapping(raw, f"source.schedule[{i}]")
                _check_keys(entry, "source.schedule[]", f"source.schedule[{i}]")
    try:
        source = parse_source_spec(source_raw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return ExperimentConfig(
        study=study,
        tasks=tasks,
        execution=execution,
        retry_policy=policy,
        failure_injection=injection,
        executors=executors,
        source=source,
        seed=seed,
        raw_text=text,
    )
