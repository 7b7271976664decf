import pytest

from goalmeter.fixtures import (
    CANONICAL_EXP_ID,
    build_canonical_pair,
    install_canonical_pair,
)
from goalmeter.store import (
    ExperimentStore,
    MissingRawData,
    StoreLocked,
    UnknownReport,
)


@pytest.fixture
def canonical_store():
    store = ExperimentStore(":memory:")
    install_canonical_pair(store)
    return store


def test_registry_seeded_with_methodology_rows():
    store = ExperimentStore(":memory:")
    rows = {
        r["quantity"]: (r["provenance_tier"], r["formula_text"])
        for r in store.conn.execute("SELECT * FROM methodology_registry")
    }
    assert rows["e_pkg"][0] == "MEASURED"
    assert rows["e_dyn"][0] == "CALCULATED"
    assert rows["e_phase"][0] == "INFERRED"
    assert "f_cpu * e_dyn" in rows["e_attr"][1]
    # the artifact-defined fractions are flagged as such
    assert "overhead_fraction" in rows and "orchestration_fraction" in rows
    assert len(rows) >= 15


def test_etl_fills_canonical_totals(canonical_store):
    row = canonical_store.conn.execute(
        "SELECT total_energy_uj, success, n_attempts FROM goal_execution"
        " WHERE workflow_type = 'agentic'"
    ).fetchone()
    assert row["total_energy_uj"] == pytest.approx(3_614_500_000, abs=100_000)
    assert row["success"] == 1
    assert row["n_attempts"] == 2


def test_etl_fills_attempt_energies(canonical_store):
    rows = canonical_store.conn.execute(
        "SELECT attempt_index, outcome, e_attr_uj FROM goal_attempt"
        " WHERE goal_id LIKE '%agentic' ORDER BY attempt_index"
    ).fetchall()
    assert rows[0]["outcome"] == "failure_injected"
    assert rows[0]["e_attr_uj"] == pytest.approx(2_256_100_000, abs=100_000)
    assert rows[1]["e_attr_uj"] == pytest.approx(1_358_400_000, abs=100_000)


def test_etl_unknown_experiment_raises():
    store = ExperimentStore(":memory:")
    with pytest.raises(MissingRawData):
        store.etl_run("nope")


def test_etl_empty_experiment_is_fine():
    store = ExperimentStore(":memory:")
    store.insert_experiment("empty", "normal", "", "h", "h", "h")
    report = store.etl_run("empty")
    assert report.n_runs == 0
    assert report.flags == []


def test_etl_idempotent_byte_identical(canonical_store):
    before = {
        t: canonical_store.export_table_csv(t)
        for t in ("runs", "goal_execution", "goal_attempt", "orchestration_events")
    }
    canonical_store.etl_run(CANONICAL_EXP_ID)
    after = {t: canonical_store.export_table_csv(t) for t in before}
    assert before == after


def test_low_coverage_nulls_phases_but_keeps_totals():
    store = ExperimentStore(":memory:")
    baseline, agentic, _ = build_canonical_pair()
    # keep only the first 10% of samples: coverage far below 80%
    sparse = agentic.measurement
    sparse.intervals = sparse.intervals[: len(sparse.intervals) // 10]
    store.insert_baseline(baseline)
    store.insert_experiment("sparse", "normal", "", "h", "h", "h")
    store.insert_unit(
        "sparse", "run-sparse", "goal-sparse", "pk", agentic.unit,
        baseline.baseline_id,
    )
    store.etl_run("sparse")
    row = store.conn.execute(
        "SELECT e_attr_uj, e_planning_uj, coverage_pct, tier FROM runs"
        " WHERE run_id = 'run-sparse'"
    ).fetchone()
    assert row["e_attr_uj"] == pytest.approx(3_614_500_000, abs=100_000)  # totals exact
    assert row["e_planning_uj"] is None  # phases unresolved
    assert row["tier"] == "excluded"
    flags = {
        r["flag"]
        for r in store.conn.execute(
            "SELECT flag FROM run_quality WHERE run_id = 'run-sparse'"
        )
    }
    assert "low_coverage" in flags


def test_conservation_pass_and_injected_discrepancy(canonical_store):
    goal_id = f"{CANONICAL_EXP_ID}-gsm8k_basic-r000-agentic"
    passed, residual = canonical_store.conservation_check(goal_id)
    assert passed
    assert residual <= 1000.0
    # inject a 2 mJ discrepancy into one attempt
    canonical_store.conn.execute(
        "UPDATE goal_attempt SET e_attr_uj = e_attr_uj + 2000 WHERE goal_id = ?"
        " AND attempt_index = 1",
        (goal_id,),
    )
    passed, residual = canonical_store.conservation_check(goal_id)
    assert not passed
    assert residual == pytest.approx(2000, abs=1)
    flags = canonical_store.conn.execute(
        "SELECT flag FROM run_quality WHERE flag = 'conservation_violation'"
    ).fetchall()
    assert flags
    # the flagged goal is excluded from every report; its clean pair
    # partner remains, and the pair query loses the pair
    assert [r[0] for r in canonical_store.report("rq01").rows] == ["linear"]
    assert canonical_store.report("rq02").rows == []


def test_single_attempt_goal_passes_by_construction(canonical_store):
    goal_id = f"{CANONICAL_EXP_ID}-gsm8k_basic-r000-linear"
    passed, residual = canonical_store.conservation_check(goal_id)
    assert passed
    assert residual == pytest.approx(0.0, abs=1e-3)


def test_rq01_per_workflow_rows(canonical_store):
    report = canonical_store.report("rq01")
    rows = {r[0]: r for r in report.rows}
    assert rows["agentic"][4] == pytest.approx(3614.5, abs=0.1)
    assert rows["linear"][4] == pytest.approx(254.5, abs=0.1)


def test_rq02_canonical_pair_ooi(canonical_store):
    report = canonical_store.report("rq02")
    assert len(report.rows) == 1
    row = report.rows[0]
    assert row[2] == pytest.approx(3614.5, abs=0.1)
    assert row[3] == pytest.approx(254.5, abs=0.1)
    assert row[4] == pytest.approx(14.2, abs=0.05)
    line = report.to_csv().strip().splitlines()[-1]
    assert line.endswith("14.2")


def test_rq03_phase_power_rows(canonical_store):
    report = canonical_store.report("rq03", run_id="run-canonical-agentic")
    assert [r[0] for r in report.rows] == ["planning", "execution", "synthesis"]
    planning = report.rows[0]
    assert planning[2] == pytest.approx(35_127.0, abs=0.1)  # ms
    assert planning[3] > 0  # contained samples
    # 552.6 J * (4274.1/3614.5) over 35.127 s, in mW
    expected_mw = 552.6 * (4274.1 / 3614.5) / 35.127 * 1000.0
    assert planning[4] == pytest.approx(expected_mw, rel=0.01)


def test_rq03_requires_run_id(canonical_store):
    with pytest.raises(UnknownReport):
        canonical_store.report("rq03")


def test_rq04_strict_standard_loose_exact_fixture():
    store = ExperimentStore(":memory:")
    baseline, agentic, _ = build_canonical_pair()
    store.insert_baseline(baseline)
    store.insert_experiment("bx", "normal", "", "h", "h", "h")
    store.insert_unit("bx", "run-bx", "goal-bx", "pk", agentic.unit, baseline.baseline_id)
    store.etl_run("bx")
    # hand-set the derived columns: task 100 J, pre 10 J, post 20 J
    store.conn.execute(
        "UPDATE runs SET e_attr_uj = 100e6, e_pre_uj = 10e6, e_post_uj = 20e6"
        " WHERE run_id = 'run-bx'"
    )
    report = store.report("rq04")
    assert report.rows == [("agentic", 100.0, 110.0, 130.0)]


def test_rq04_nesting_on_canonical(canonical_store):
    for row in canonical_store.report("rq04").rows:
        assert row[1] <= row[2] <= row[3]


def test_rq05_requires_three_reps(canonical_store):
    assert canonical_store.report("rq05").rows == []  # single rep per task


def test_rq05_variance_with_repetitions():
    from goalmeter.counters import ManualClock, PowerSegment, SyntheticSource
    from goalmeter.harness import SimulatedHarness
    from goalmeter.tasks import (
        default_agentic_executor,
        default_linear_executor,
        goals_for_task,
    )
    from goalmeter.workflow import FailureInjection, RetryPolicy, run_paired_experiment

    src = SyntheticSource(
        [PowerSegment(0.0, 2.0)], seed=2, clock=ManualClock(), busy_watts=12.0
    )
    result = run_paired_experiment(
        [goals_for_task("science_qa")],
        default_agentic_executor(0.1), default_linear_executor(0.1),
        RetryPolicy(max_retries=2),
        FailureInjection(enabled=True, tool_failure_rate=0.5, seed=2),
        SimulatedHarness(src), repetitions=4, cool_down_s=0.5,
    )
    store = ExperimentStore(":memory:")
    baseline, _, _ = build_canonical_pair()
    store.persist_experiment("exp-reps", "normal", "", result, baseline)
    store.etl_run("exp-reps")
    report = store.report("rq05")
    rows = {(r[0], r[1]): r for r in report.rows}
    assert ("science_qa", "agentic") in rows
    assert rows[("science_qa", "agentic")][2] == 4  # n_reps
    assert rows[("science_qa", "linear")][4] == pytest.approx(0.0, abs=0.01)
    # retry variance shows up as a positive range on the agentic side
    assert rows[("science_qa", "agentic")][4] > 0
    # rows sorted by ascending range
    ranges = [r[4] for r in report.rows]
    assert ranges == sorted(ranges)


def test_abandoned_unit_attributes_everything_to_retry():
    from goalmeter.counters import ManualClock, PowerSegment, SyntheticSource
    from goalmeter.harness import SimulatedHarness
    from goalmeter.tasks import default_agentic_executor, goals_for_task
    from goalmeter.workflow import FailureInjection, RetryPolicy, execute_goal

    src = SyntheticSource(
        [PowerSegment(0.0, 2.0)], seed=3, clock=ManualClock(), busy_watts=12.0
    )
    unit = execute_goal(
        goals_for_task("gsm8k_basic")[0], default_agentic_executor(0.1),
        RetryPolicy(max_retries=2),
        FailureInjection(enabled=True, tool_failure_rate=1.0, seed=3),
        SimulatedHarness(src),
    )
    assert not unit.final_success
    store = ExperimentStore(":memory:")
    baseline, _, _ = build_canonical_pair()
    store.insert_baseline(baseline)
    store.insert_experiment("exp-ab", "normal", "", "h", "h", "h")
    store.insert_unit("exp-ab", "run-ab", "goal-ab", "pk", unit, baseline.baseline_id)
    store.etl_run("exp-ab")
    run = store.conn.execute("SELECT * FROM runs WHERE run_id='run-ab'").fetchone()
    goal = store.conn.execute(
        "SELECT * FROM goal_execution WHERE goal_id='goal-ab'"
    ).fetchone()
    # abandoned units are retained with totals filled, success 0
    assert goal["success"] == 0
    assert goal["n_attempts"] == 3
    assert goal["total_energy_uj"] == pytest.approx(run["e_attr_uj"])
    assert run["e_attr_uj"] > 0
    # with no successful attempt there are no phase windows: all gap,
    # and the whole gap is retry energy from the failed windows
    assert run["e_gap_uj"] == pytest.approx(run["e_attr_uj"])
    assert run["e_retry_uj"] == pytest.approx(run["e_attr_uj"], rel=1e-6)
    passed, _ = store.conservation_check("goal-ab")
    assert passed


def test_rq06_validity_and_tiers(canonical_store):
    report = canonical_store.report("rq06")
    row = report.rows[0]
    as_dict = dict(zip(report.columns, row))
    assert as_dict["validity_pct"] == 100.0
    assert as_dict["gold_count"] == 2
    assert as_dict["excluded_count"] == 0


def test_unknown_report_kind(canonical_store):
    with pytest.raises(UnknownReport):
        canonical_store.report("rq99")


def test_reports_read_derived_columns_only(canonical_store):
    # deleting raw samples after ETL must not change any report
    before = {
        kind: canonical_store.report(kind).rows
        for kind in ("rq01", "rq02", "rq04", "rq05", "rq06")
    }
    before["rq03"] = canonical_store.report("rq03", run_id="run-canonical-agentic").rows
    canonical_store.conn.execute("DELETE FROM energy_samples")
    after = {
        kind: canonical_store.report(kind).rows
        for kind in ("rq01", "rq02", "rq04", "rq05", "rq06")
    }
    after["rq03"] = canonical_store.report("rq03", run_id="run-canonical-agentic").rows
    assert before == after


def test_summary_contains_both_ooi_aggregations(canonical_store):
    doc = canonical_store.summary_document()
    assert "ooi_ratio_of_means" in doc["overall"]
    assert "ooi_mean_of_pair_ratios" in doc["overall"]
    assert doc["overall"]["ooi_ratio_of_means"] == pytest.approx(14.2, abs=0.05)
    task = doc["tasks"][0]
    assert task["ooi"] == pytest.approx(14.2, abs=0.05)
    assert task["tau_orch"] == pytest.approx(13.2, abs=0.05)
    assert task["agentic"]["waste_pct"] == pytest.approx(62.4, abs=0.1)


def test_attribution_csv_fixed_column_order(canonical_store):
    text = canonical_store.export_attribution_csv()
    lines = text.strip().splitlines()
    assert lines[0] == (
        "run_id,e_pkg_uj,e_dyn_uj,e_attr_uj,e_planning_uj,e_execution_uj,"
        "e_synthesis_uj,e_gap_uj,e_retry_uj,e_coordination_uj,clamp_applied"
    )
    assert len(lines) == 3
    agentic = lines[1].split(",")
    assert agentic[0] == "run-canonical-agentic"
    assert float(agentic[1]) == pytest.approx(4_274_100_000, abs=100_000)
    assert agentic[10] == "0"


def test_summary_csv_column_contract(canonical_store):
    report = canonical_store.report("summary")
    assert report.columns == [
        "task_id", "workflow_type", "n_goals", "success_rate", "epg_j",
        "ooi", "ooi_lo95", "ooi_hi95", "waste_pct", "tau_orch",
    ]
    rows = {(r[0], r[1]): r for r in report.rows}
    assert rows[("gsm8k_basic", "agentic")][4] == pytest.approx(3614.5, abs=0.1)
    assert rows[("gsm8k_basic", "linear")][5] is None  # ooi lives on the agentic row


def test_every_run_row_carries_all_three_hashes(canonical_store):
    for row in canonical_store.conn.execute("SELECT h_hw, h_env, h_run FROM runs"):
        assert row["h_hw"] and row["h_env"] and row["h_run"]


def test_export_import_round_trip(tmp_path, canonical_store):
    canonical_store.export_bundle(tmp_path / "bundle", exp_id=CANONICAL_EXP_ID)
    restored = ExperimentStore(":memory:")
    exp_ids = restored.import_bundle(tmp_path / "bundle")
    assert exp_ids == [CANONICAL_EXP_ID]
    restored.etl_run(CANONICAL_EXP_ID)
    assert restored.report("rq02").rows == canonical_store.report("rq02").rows
    for table in ("runs", "goal_execution", "goal_attempt", "energy_samples"):
        assert restored.export_table_csv(table) == canonical_store.export_table_csv(table)


def test_store_level_lock():
    store = ExperimentStore(":memory:")
    store.acquire_lock("measurement")
    with pytest.raises(StoreLocked):
        store.acquire_lock("measurement")
    store.release_lock("measurement")
    store.acquire_lock("measurement")


def test_side_channel_slots_exist_and_are_empty():
    store = ExperimentStore(":memory:")
    for table in ("perf_samples", "thermal_samples"):
        rows = store.conn.execute(f"SELECT COUNT(*) AS n FROM {table}").fetchone()
        assert rows["n"] == 0
