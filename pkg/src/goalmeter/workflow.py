"""Goals, attempts, retry policy, failure injection, and executors.

A goal is one unit of user intent with a success evaluator fixed
before execution. Executing a goal produces a workflow unit: one or
more measured attempts ending in success or abandonment. Abandoned
units are retained, never dropped; their energy still counts.
"""

from __future__ import annotations

import os
import random
import signal
import subprocess
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Sequence

from .attribution import Phase, PhaseWindow
from .errors import GoalMeterError
from .harness import _InjectedAbortSignal


class ExecutorCrash(GoalMeterError):
    """Executor failed outside the evaluator path (tool/subprocess)."""


class WorkflowType(str, Enum):
    AGENTIC = "agentic"
    LINEAR = "linear"


class Outcome(str, Enum):
    SUCCESS = "success"
    FAILURE_INJECTED = "failure_injected"
    FAILURE_EVALUATOR = "failure_evaluator"
    TIMEOUT = "timeout"
    CRASH = "crash"


class EvaluatorKind(str, Enum):
    EXACT_STRING = "exact_string"
    NORMALIZED_SET = "normalized_set"
    INTEGER_EXACT = "integer_exact"
    DETERMINISTIC_VALIDATOR = "deterministic_validator"


@dataclass(frozen=True)
class SuccessEvaluator:
    """Pure, binary success predicate, pre-specified per goal."""

    kind: EvaluatorKind
    validator: Callable[[str, Any], bool] | None = None

    def __post_init__(self) -> None:
        if self.kind is EvaluatorKind.DETERMINISTIC_VALIDATOR and self.validator is None:
            raise ValueError("deterministic_validator requires a validator callable")


def _normalize(text: str) -> str:
    return " ".join(text.lower().split())


def evaluate_success(evaluator: SuccessEvaluator, output: Any, expected: Any) -> bool:
    """Binary acceptance of an output against the reference answer(s).

    Multi-candidate outputs (a list/tuple of strings) are accepted if
    any single candidate is accepted; the energy of producing all of
    them still belongs to the workflow unit.
    """
    if isinstance(output, (list, tuple)):
        return any(evaluate_success(evaluator, item, expected) for item in output)
    references = (
        expected if isinstance(expected, (list, tuple, set, frozenset)) else [expected]
    )
    if evaluator.kind is EvaluatorKind.EXACT_STRING:
        return any(str(output) == str(ref) for ref in references)
    if evaluator.kind is EvaluatorKind.NORMALIZED_SET:
        normalized = _normalize(str(output))
        return any(normalized == _normalize(str(ref)) for ref in references)
    if evaluator.kind is EvaluatorKind.INTEGER_EXACT:
        try:
            value = int(str(output).strip())
        except ValueError:
            return False
        return any(value == int(ref) for ref in references)
    return bool(evaluator.validator(str(output), expected))


@dataclass(frozen=True)
class Goal:
    goal_id: str
    task_id: str
    description: str
    evaluator: SuccessEvaluator
    expected: Any


@dataclass
class Attempt:
    index: int  # 1-based
    outcome: Outcome
    start_ns: int
    end_ns: int
    phase_windows: list[PhaseWindow] = field(default_factory=list)
    e_attr_uj: float = 0.0  # filled by ETL


@dataclass
class WorkflowUnit:
    goal: Goal
    workflow_type: WorkflowType
    attempts: list[Attempt]
    final_success: bool
    measurement: Any = None  # RunMeasurement, attached by the harness

    @property
    def total_energy_uj(self) -> float:
        return sum(a.e_attr_uj for a in self.attempts)


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 5
    retry_on_timeout: bool = True
    retry_on_tool_error: bool = True
    retry_on_api_error: bool = True
    timeout_s: float = 120.0

    def max_attempts(self) -> int:
        return self.max_retries + 1


@dataclass(frozen=True)
class FailureInjection:
    enabled: bool = False
    tool_failure_rate: float = 0.0
    timeout_rate: float = 0.0
    seed: int = 0
    failure_point: float = 1.0  # fraction of workload consumed before failing

    def __post_init__(self) -> None:
        for rate in (self.tool_failure_rate, self.timeout_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("injection rates must lie in [0, 1]")
        if not 0.0 < self.failure_point <= 1.0:
            raise ValueError("failure_point must lie in (0, 1]")

    def rng(self) -> random.Random:
        return random.Random(self.seed)


@dataclass(frozen=True)
class PhaseSpec:
    phase: Phase
    duration_s: float
    intensity: float = 1.0  # busy duty-cycle in [0, 1]


class Executor:
    """Contract: run one attempt, emitting phase events through ctx.

    `ctx` is an AttemptContext from the harness; executors bracket
    their semantic phases with ctx.phase(...) and advance time either
    by burning CPU (live) or by simulated sleep, via ctx.work(...).
    """

    kind: str = "abstract"

    def run(self, goal: Goal, ctx) -> str:
        raise NotImplementedError

    def total_duration_s(self) -> float:
        raise NotImplementedError


class SyntheticExecutor(Executor):
    """Deterministic workload: fixed per-phase durations and duty
    cycles, answer produced by a pure function of (goal, attempt).

    The linear kind emits a single execution phase; the agentic kind
    emits planning/execution/synthesis.
    """

    def __init__(
        self,
        kind: str,
        phases: Sequence[PhaseSpec],
        answer_fn: Callable[[Goal, int], str] | None = None,
        cpu_share: float = 1.0,
    ) -> None:
        if kind not in ("synthetic_linear", "synthetic_agentic"):
            raise ValueError(f"unknown synthetic executor kind {kind!r}")
        if kind == "synthetic_linear":
            bad = [s for s in phases if s.phase is not Phase.EXECUTION]
            if bad or len(list(phases)) != 1:
                raise ValueError("linear executor emits a single execution phase")
        self.kind = kind
        self.phases = list(phases)
        self.answer_fn = answer_fn or (lambda goal, attempt: _first_reference(goal))
        self.cpu_share = cpu_share

    def total_duration_s(self) -> float:
        return sum(s.duration_s for s in self.phases)

    def run(self, goal: Goal, ctx) -> str:
        for spec in self.phases:
            with ctx.phase(spec.phase):
                ctx.work(spec.duration_s, spec.intensity)
        return self.answer_fn(goal, ctx.attempt_index)


def _first_reference(goal: Goal) -> str:
    expected = goal.expected
    if isinstance(expected, (list, tuple, set, frozenset)):
        expected = next(iter(expected))
    return str(expected)


_PHASE_EVENT_NAMES = {p.value: p for p in Phase}


class ExternalCommandExecutor(Executor):
    """Runs a subprocess: stdout is the output, stderr carries the
    phase-event line protocol `PHASE <planning|execution|synthesis>
    <start|end>`.
    """

    kind = "external_command"

    def __init__(self, argv: Sequence[str]) -> None:
        if not argv:
            raise ValueError("argv must not be empty")
        self.argv = list(argv)

    def total_duration_s(self) -> float:
        return 0.0  # unknown ahead of time

    def run(self, goal: Goal, ctx) -> str:
        try:
            proc = subprocess.Popen(
                self.argv,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                start_new_session=True,  # so a timeout can kill grandchildren too
            )
        except OSError as exc:
            raise ExecutorCrash(f"cannot spawn {self.argv[0]}: {exc}") from exc

        # both pipes are drained on reader threads so a chatty or hung
        # child can neither deadlock the pipes nor dodge the deadline
        open_phases: set[Phase] = set()
        stdout_chunks: list[str] = []

        def _drain_stdout() -> None:
            stdout_chunks.append(proc.stdout.read())

        def _parse_stderr() -> None:
            for line in proc.stderr:
                parts = line.strip().split()
                if len(parts) == 3 and parts[0] == "PHASE":
                    phase = _PHASE_EVENT_NAMES.get(parts[1])
                    if phase is None:
                        continue
                    if parts[2] == "start" and phase not in open_phases:
                        ctx.open_phase(phase)
                        open_phases.add(phase)
                    elif parts[2] == "end" and phase in open_phases:
                        ctx.close_phase(phase)
                        open_phases.discard(phase)

        readers = [
            threading.Thread(target=_drain_stdout, daemon=True),
            threading.Thread(target=_parse_stderr, daemon=True),
        ]
        for reader in readers:
            reader.start()
        timed_out = False
        try:
            proc.wait(timeout=ctx.timeout_s)
        except subprocess.TimeoutExpired:
            timed_out = True
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except OSError:
                proc.kill()
            proc.wait()
        finally:
            for reader in readers:
                reader.join()
            for phase in list(open_phases):
                ctx.close_phase(phase)
        if timed_out:
            raise TimeoutError
        if proc.returncode != 0:
            raise ExecutorCrash(f"{self.argv[0]} exited {proc.returncode}")
        return (stdout_chunks[0] if stdout_chunks else "").strip()


def _should_retry(outcome: Outcome, policy: RetryPolicy) -> bool:
    if outcome is Outcome.TIMEOUT:
        return policy.retry_on_timeout
    if outcome in (Outcome.FAILURE_INJECTED, Outcome.CRASH):
        return policy.retry_on_tool_error
    # a rejected answer is always worth retrying while budget remains
    return outcome is Outcome.FAILURE_EVALUATOR


def execute_goal(
    goal: Goal,
    executor: Executor,
    policy: RetryPolicy,
    injection: FailureInjection,
    harness,
    workflow_type: WorkflowType = WorkflowType.AGENTIC,
    injection_rng: random.Random | None = None,
) -> WorkflowUnit:
    """Run one goal to success or abandonment under the retry policy.

    Injected failures consume the attempt's workload up to the
    configured failure point (default: the whole attempt) before
    failing. Every attempt is recorded; a unit that exhausts the
    budget is returned with final_success=False, not discarded.
    """
    rng = injection_rng if injection_rng is not None else injection.rng()
    harness.begin_unit()
    attempts: list[Attempt] = []
    try:
        for index in range(1, policy.max_attempts() + 1):
            # unconditional draws keep the decision stream aligned
            u_tool, u_timeout = rng.random(), rng.random()
            injected: Outcome | None = None
            if injection.enabled:
                if u_tool < injection.tool_failure_rate:
                    injected = Outcome.FAILURE_INJECTED
                elif u_timeout < injection.timeout_rate:
                    injected = Outcome.TIMEOUT
            ctx = harness.attempt_context(
                index,
                timeout_s=policy.timeout_s,
                abort_after_s=(
                    executor.total_duration_s() * injection.failure_point
                    if injected is not None and injection.failure_point < 1.0
                    else None
                ),
            )
            start_ns = harness.now_ns()
            output: str | None = None
            outcome: Outcome
            try:
                output = executor.run(goal, ctx)
            except _InjectedAbortSignal:
                outcome = injected if injected is not None else Outcome.FAILURE_INJECTED
            except TimeoutError:
                outcome = Outcome.TIMEOUT
            except ExecutorCrash:
                outcome = Outcome.CRASH
            else:
                elapsed_s = (harness.now_ns() - start_ns) / 1e9
                if injected is not None:
                    outcome = injected
                elif elapsed_s > policy.timeout_s:
                    outcome = Outcome.TIMEOUT
                elif evaluate_success(goal.evaluator, output, goal.expected):
                    outcome = Outcome.SUCCESS
                else:
                    outcome = Outcome.FAILURE_EVALUATOR
            attempts.append(
                Attempt(
                    index=index,
                    outcome=outcome,
                    start_ns=start_ns,
                    end_ns=harness.now_ns(),
                    phase_windows=ctx.phase_windows,
                )
            )
            if outcome is Outcome.SUCCESS or not _should_retry(outcome, policy):
                break
    finally:
        measurement = harness.end_unit()
    return WorkflowUnit(
        goal=goal,
        workflow_type=workflow_type,
        attempts=attempts,
        final_success=attempts[-1].outcome is Outcome.SUCCESS,
        measurement=measurement,
    )


@dataclass
class PairedUnit:
    pair_key: str
    agentic: WorkflowUnit
    linear: WorkflowUnit


@dataclass
class ExperimentResult:
    units: list[PairedUnit]
    injection: FailureInjection
    policy: RetryPolicy


def run_paired_experiment(
    goal_set: Sequence[Goal | Sequence[Goal]],
    agentic_executor: Executor,
    linear_executor: Executor,
    policy: RetryPolicy,
    injection: FailureInjection,
    harness,
    repetitions: int = 1,
    cool_down_s: float = 30.0,
    pair_key_fn: Callable[[Goal, int], str] | None = None,
) -> ExperimentResult:
    """Execute each goal agentic-then-linear back to back (thermal
    pairing), with a cool-down sleep between goals. Per-unit failures
    are recorded in the unit itself and never abort the experiment.

    An entry in goal_set may be a whole goal family (a sequence);
    repetitions then cycle through the family, one goal per repetition.
    """
    rng = injection.rng()
    pairs: list[PairedUnit] = []
    first = True
    for rep in range(repetitions):
        for entry in goal_set:
            if isinstance(entry, Goal):
                goal = entry
            else:
                goal = entry[rep % len(entry)]
            if not first:
                harness.cool_down(cool_down_s)
            first = False
            agentic_unit = execute_goal(
                goal, agentic_executor, policy, injection, harness,
                workflow_type=WorkflowType.AGENTIC, injection_rng=rng,
            )
            linear_unit = execute_goal(
                goal, linear_executor, policy, FailureInjection(enabled=False),
                harness, workflow_type=WorkflowType.LINEAR, injection_rng=rng,
            )
            key = (
                pair_key_fn(goal, rep)
                if pair_key_fn
                else f"{goal.task_id}-r{rep:03d}"
            )
            pairs.append(PairedUnit(pair_key=key, agentic=agentic_unit, linear=linear_unit))
    return ExperimentResult(units=pairs, injection=injection, policy=policy)
