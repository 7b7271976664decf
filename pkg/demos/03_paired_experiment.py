"""A full paired experiment campaign on the simulated harness.

Runs two synthetic profiles over 30 repetitions each and prints the
research queries: the retry-amplified profile lands well above parity,
while the tool-dispatch profile (tiny agentic dispatch vs a long
single-pass compute) inverts below 1.0 -- the metric follows workflow
structure, not a fixed bias.
"""

from goalmeter.counters import ManualClock, PowerSegment, SyntheticSource
from goalmeter.fixtures import canonical_baseline
from goalmeter.harness import SimulatedHarness
from goalmeter.metrics import bootstrap_ci
from goalmeter.store import ExperimentStore
from goalmeter.tasks import (
    default_agentic_executor,
    default_linear_executor,
    dispatch_agentic_executor,
    dispatch_linear_executor,
    goals_for_task,
)
from goalmeter.workflow import FailureInjection, RetryPolicy, run_paired_experiment


def run_campaign(store, name, agentic, linear, injection):
    src = SyntheticSource(
        [PowerSegment(0.0, 2.0)], seed=13, clock=ManualClock(), busy_watts=14.0
    )
    result = run_paired_experiment(
        [goals_for_task("gsm8k_basic"), goals_for_task("science_qa")],
        agentic, linear, RetryPolicy(max_retries=2), injection,
        SimulatedHarness(src), repetitions=30, cool_down_s=1.0,
    )
    store.persist_experiment(name, "directional", "", result, canonical_baseline())
    store.etl_run(name)


def main():
    store = ExperimentStore(":memory:")
    run_campaign(
        store, "exp-amplified",
        default_agentic_executor(0.4), default_linear_executor(0.4),
        FailureInjection(enabled=True, tool_failure_rate=0.5, seed=13),
    )
    run_campaign(
        store, "exp-dispatch",
        dispatch_agentic_executor(1.0), dispatch_linear_executor(1.0),
        FailureInjection(enabled=True, tool_failure_rate=0.3, seed=14),
    )

    print("== per-workflow aggregates (rq01) ==")
    print(store.report("rq01").to_csv())
    print("== top overhead pairs (rq02, first 5) ==")
    report = store.report("rq02")
    print(",".join(report.columns))
    for row in report.rows[:5]:
        print(",".join(str(v) for v in row))
    print()
    print("== validity (rq06) ==")
    print(store.report("rq06").to_csv())

    doc = store.summary_document()
    pairs = store.conn.execute(
        """
        SELECT ag.total_energy_uj AS a, lin.total_energy_uj AS l, ag.exp_id
        FROM goal_execution ag
        JOIN goal_execution lin ON lin.pair_key = ag.pair_key
         AND lin.exp_id = ag.exp_id AND lin.workflow_type = 'linear'
        WHERE ag.workflow_type = 'agentic' ORDER BY ag.goal_id
        """
    ).fetchall()
    for exp in ("exp-amplified", "exp-dispatch"):
        exp_pairs = [(r["a"], r["l"]) for r in pairs if r["exp_id"] == exp]
        ci = bootstrap_ci(exp_pairs, "ooi_of_pairs")
        verdict = "overhead (tax)" if ci.point > 1 else "dividend (inversion)"
        print(f"{exp}: overhead ratio {ci.point:.2f} "
              f"[{ci.lo95:.2f}, {ci.hi95:.2f}] over {len(exp_pairs)} pairs -> {verdict}")
    print(f"overall ratio-of-means {doc['overall']['ooi_ratio_of_means']:.2f}, "
          f"mean-of-pair-ratios {doc['overall']['ooi_mean_of_pair_ratios']:.2f}")


if __name__ == "__main__":
    main()
