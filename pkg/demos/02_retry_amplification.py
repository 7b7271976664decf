"""Retry amplification: two systems with identical per-attempt energy.

System A answers correctly on attempt 1. System B burns four injected
failures before succeeding on attempt 5. Per-attempt accounting calls
them equal; goal-level accounting separates them by exactly 5x.
"""

from goalmeter.counters import ManualClock, PowerSegment, SyntheticSource
from goalmeter.fixtures import canonical_baseline
from goalmeter.harness import SimulatedHarness
from goalmeter.store import ExperimentStore
from goalmeter.tasks import default_agentic_executor, default_linear_executor, goals_for_task
from goalmeter.workflow import FailureInjection, RetryPolicy, run_paired_experiment


def harness():
    src = SyntheticSource(
        [PowerSegment(0.0, 2.0)], seed=1, clock=ManualClock(), busy_watts=14.0
    )
    return SimulatedHarness(src)


def run_system(name, injection):
    result = run_paired_experiment(
        [goals_for_task("gsm8k_basic")[0]],
        default_agentic_executor(scale_s=0.2),
        default_linear_executor(scale_s=0.2),
        RetryPolicy(max_retries=4),
        injection,
        harness(),
        repetitions=1,
        cool_down_s=0.0,
    )
    unit = result.units[0].agentic
    store = ExperimentStore(":memory:")
    store.persist_experiment(f"exp-{name}", "forcing", "", result, canonical_baseline())
    store.etl_run(f"exp-{name}")
    attempts = store.conn.execute(
        "SELECT attempt_index, outcome, e_attr_uj FROM goal_attempt ga"
        " JOIN goal_execution ge ON ge.goal_id = ga.goal_id"
        " WHERE ge.workflow_type = 'agentic' ORDER BY attempt_index"
    ).fetchall()
    total = store.conn.execute(
        "SELECT total_energy_uj FROM goal_execution WHERE workflow_type='agentic'"
    ).fetchone()[0]
    print(f"system {name}: {len(unit.attempts)} attempt(s), success={unit.final_success}")
    for row in attempts:
        print(f"  attempt {row[0]}: {row[1]:<16} {row[2] / 1e6:8.3f} J")
    print(f"  goal energy {total / 1e6:.3f} J")
    return total


def main():
    # seed 32 fires the tool-failure draw on attempts 1-4, passes on 5
    total_b = run_system(
        "B", FailureInjection(enabled=True, tool_failure_rate=0.5, seed=32)
    )
    total_a = run_system("A", FailureInjection(enabled=False))
    print(f"EpG ratio B/A = {total_b / total_a:.2f}x "
          "(identical per-attempt energy, different reliability)")


if __name__ == "__main__":
    main()
