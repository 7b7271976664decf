import json

import pytest

from goalmeter.cli import main
from goalmeter.fixtures import install_canonical_pair
from goalmeter.store import ExperimentStore

CONFIG = """
study:
  name: "cli test"
  experiment_type: "failure_injection"
  experiment_goal: "exercise the cli"
tasks:
  - id: gsm8k_basic
execution:
  repetitions: 2
  cool_down_seconds: 1
  save_db: true
retry_policy:
  max_retries: 2
failure_injection:
  enabled: true
  tool_failure_rate: 0.4
source:
  kind: synthetic
  watts: 2.0
  busy_watts: 12.0
  seed: 3
seed: 5
"""


@pytest.fixture
def db(tmp_path):
    return str(tmp_path / "test.db")


def _baseline(db):
    return main(["baseline", "--db", db, "--source", "synthetic:2:3",
                 "--windows", "4", "--window-s", "1"])


def test_missing_db_exits_64(capsys):
    assert main(["baseline"]) == 64
    captured = capsys.readouterr()
    assert captured.out == ""  # nothing machine-readable on stdout
    assert "--db" in captured.err


def test_baseline_prints_only_the_id(db, capsys):
    assert _baseline(db) == 0
    captured = capsys.readouterr()
    lines = captured.out.strip().splitlines()
    assert len(lines) == 1
    assert len(lines[0]) == 16
    int(lines[0], 16)  # hex short id


def test_baseline_env_var_default(db, capsys, monkeypatch):
    monkeypatch.setenv("GOALMETER_DB", db)
    assert main(["baseline", "--source", "synthetic:2:3", "--windows", "2",
                 "--window-s", "1"]) == 0


def test_run_prints_exp_id_and_is_deterministic(db, tmp_path, capsys):
    config = tmp_path / "cfg.yaml"
    config.write_text(CONFIG)
    _baseline(db)
    capsys.readouterr()
    assert main(["run", "--config", str(config), "--db", db]) == 0
    first = capsys.readouterr().out.strip()
    assert first.startswith("exp-")
    assert main(["run", "--config", str(config), "--db", db]) == 0
    second = capsys.readouterr().out.strip()
    assert first == second  # deterministic experiment id


def test_run_bad_config_exits_2(db, tmp_path, capsys):
    config = tmp_path / "bad.yaml"
    config.write_text("study:\n  name: [unclosed\n")
    assert main(["run", "--config", str(config), "--db", db]) == 2
    assert "line" in capsys.readouterr().err


def test_run_without_baseline_exits_2(db, tmp_path, capsys):
    config = tmp_path / "cfg.yaml"
    config.write_text(CONFIG)
    assert main(["run", "--config", str(config), "--db", db]) == 2
    assert "baseline" in capsys.readouterr().err


def test_run_zero_repetitions_ok(db, tmp_path, capsys):
    config = tmp_path / "cfg.yaml"
    config.write_text(CONFIG.replace("repetitions: 2", "repetitions: 0"))
    _baseline(db)
    assert main(["run", "--config", str(config), "--db", db]) == 0


def test_report_unknown_kind_exits_3(db):
    _baseline(db)
    assert main(["report", "--db", db, "--kind", "rq99"]) == 3


def test_report_empty_db_headers_only(db, capsys):
    _baseline(db)
    capsys.readouterr()
    assert main(["report", "--db", db, "--kind", "rq01"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("workflow_type,")
    assert len(out.strip().splitlines()) == 1


def test_report_rq02_canonical_line_ends_with_14_2(db, capsys):
    store = ExperimentStore(db)
    install_canonical_pair(store)
    store.close()
    assert main(["report", "--db", db, "--kind", "rq02"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    assert lines[1].endswith("14.2")


def test_report_auto_runs_stale_etl(db, capsys):
    store = ExperimentStore(db)
    install_canonical_pair(store)
    # wipe the derived columns: the report must re-derive before querying
    store.conn.execute("UPDATE runs SET e_attr_uj = NULL, e_dyn_uj = NULL")
    store.conn.execute("UPDATE goal_execution SET total_energy_uj = NULL")
    store.conn.commit()
    store.close()
    assert main(["report", "--db", db, "--kind", "rq02"]) == 0
    captured = capsys.readouterr()
    assert "stale" in captured.err
    assert captured.out.strip().splitlines()[-1].endswith("14.2")


def test_report_summary_json_has_both_ooi_fields(db, capsys):
    store = ExperimentStore(db)
    install_canonical_pair(store)
    store.close()
    assert main(["report", "--db", db, "--kind", "summary", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert "ooi_ratio_of_means" in doc["overall"]
    assert "ooi_mean_of_pair_ratios" in doc["overall"]


def test_etl_and_full_pipeline_reports(db, tmp_path, capsys):
    config = tmp_path / "cfg.yaml"
    config.write_text(CONFIG)
    _baseline(db)
    capsys.readouterr()
    main(["run", "--config", str(config), "--db", db])
    exp_id = capsys.readouterr().out.strip()
    assert main(["etl", "--db", db, "--exp", exp_id]) == 0
    etl_doc = json.loads(capsys.readouterr().out)
    assert etl_doc["exp_id"] == exp_id
    assert etl_doc["n_runs"] == 4  # 2 reps x 1 task x 2 workflow types
    assert main(["report", "--db", db, "--kind", "rq01"]) == 0
    out = capsys.readouterr().out
    assert "agentic" in out and "linear" in out
    # paired immunity: every run of the session shares one env/run hash
    store = ExperimentStore(db)
    distinct = store.conn.execute(
        "SELECT COUNT(DISTINCT h_env) AS e, COUNT(DISTINCT h_run) AS r FROM runs"
    ).fetchone()
    store.close()
    assert (distinct["e"], distinct["r"]) == (1, 1)


def test_simulate_certain_success(capsys):
    assert main(["simulate", "--p", "1", "--mu-e", "100", "--n", "10"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["epg_hat"] == 100.0
    assert doc["rng_algorithm"] == "numpy-pcg64"


def test_simulate_closed_form_oracle(capsys):
    assert main([
        "simulate", "--p", "0.5", "--k-max", "5", "--mu-e", "100",
        "--n", "100000", "--seed", "42",
    ]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["epg_hat"] - 200.0) <= 2.0


def test_simulate_invalid_params_exit_2(capsys):
    assert main(["simulate", "--p", "0"]) == 2


def test_simulate_convergence_csv(capsys):
    assert main([
        "simulate", "--p", "0.5", "--k-max", "5", "--mu-e", "100",
        "--n", "64000", "--convergence", "--seed", "1",
    ]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n,epg_hat,ci_lo,ci_hi"
    rows = [line.split(",") for line in lines[1:]]
    widths = [float(hi) - float(lo) for _, _, lo, hi in rows]
    assert widths[-1] < widths[0]  # bands shrink with N


def test_verify_exit_codes(tmp_path, capsys):
    from goalmeter.provenance import build_record, EnvFields, HardwareFields

    def record(kernel="6.1", commit="abc", baseline="b1"):
        return build_record(
            HardwareFields("cpu", "0x1", kernel, ("package",)),
            EnvFields("python-3", "Linux", commit, False, "0.3.0", "1"),
            "powersave", "enabled", baseline,
        )

    a = tmp_path / "a.json"
    a.write_text(record().to_json())
    same = tmp_path / "same.json"
    same.write_text(record().to_json())
    assert main(["verify", "--a", str(a), "--b", str(same)]) == 0
    assert capsys.readouterr().out.strip() == "match"

    run_drift = tmp_path / "run.json"
    run_drift.write_text(record(baseline="b2").to_json())
    assert main(["verify", "--a", str(a), "--b", str(run_drift)]) == 10
    out = capsys.readouterr().out
    assert "run_state_drift" in out and "baseline_id" in out

    env_drift = tmp_path / "env.json"
    env_drift.write_text(record(commit="fff").to_json())
    assert main(["verify", "--a", str(a), "--b", str(env_drift)]) == 11

    hw_drift = tmp_path / "hw.json"
    hw_drift.write_text(record(kernel="9.9").to_json())
    assert main(["verify", "--a", str(a), "--b", str(hw_drift)]) == 12


def test_verify_unparseable_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", "--a", str(bad), "--b", str(bad)]) == 2


def test_synthetic_runs_export_byte_identical(tmp_path, capsys):
    config = tmp_path / "cfg.yaml"
    config.write_text(CONFIG)
    exports = {}
    for name in ("one", "two"):
        db = str(tmp_path / f"{name}.db")
        assert main(["baseline", "--db", db, "--source", "synthetic:2:3",
                     "--windows", "4", "--window-s", "1"]) == 0
        assert main(["run", "--config", str(config), "--db", db]) == 0
        out_dir = tmp_path / f"export-{name}"
        assert main(["export", "--db", db, "--out", str(out_dir)]) == 0
        capsys.readouterr()
        exports[name] = {
            p.name: p.read_bytes() for p in sorted((out_dir / "tables").iterdir())
        }
        exports[name]["samples.jsonl"] = (out_dir / "samples.jsonl").read_bytes()
        exports[name]["manifest.json"] = (out_dir / "manifest.json").read_bytes()
    assert exports["one"] == exports["two"]


def test_export_import_round_trip(db, tmp_path, capsys):
    store = ExperimentStore(db)
    install_canonical_pair(store)
    store.close()
    out_dir = tmp_path / "export"
    assert main(["export", "--db", db, "--out", str(out_dir)]) == 0
    capsys.readouterr()
    assert (out_dir / "manifest.json").exists()
    assert (out_dir / "samples.jsonl").exists()
    assert (out_dir / "tables" / "runs.csv").exists()

    db2 = str(tmp_path / "restored.db")
    assert main(["import", "--db", db2, "--bundle", str(out_dir)]) == 0
    imported = json.loads(capsys.readouterr().out)
    assert imported == ["exp-canonical"]
    assert main(["report", "--db", db2, "--kind", "rq02"]) == 0
    assert capsys.readouterr().out.strip().splitlines()[-1].endswith("14.2")
