"""Embedded relational store: persistence, post-run ETL, the
goal-level conservation check, and the report query library.

Layering rule: the measurement hot path writes raw rows only; ETL
fills every derived column idempotently; report functions read derived
columns and never touch raw samples. Goals that fail the 1 mJ
conservation check are flagged and excluded from every report.
"""

from __future__ import annotations

import json
import sqlite3
import time
from dataclasses import dataclass
from pathlib import Path

from .attribution import (
    AttributionResult,
    CpuTickDelta,
    Phase,
    PhaseWindow,
    attribute_run,
)
from .baseline import BaselineRecord
from .boundary import classify_tier, coverage
from .errors import GoalMeterError
from .metrics import bootstrap_ci
from .sampler import SampleInterval, cadence_stats, interval_energy_uj
from .workflow import ExperimentResult, Outcome, WorkflowUnit

CONSERVATION_TOLERANCE_UJ = 1000.0  # 1 mJ


class MissingRawData(GoalMeterError):
    pass


class UnknownReport(GoalMeterError):
    pass


class StoreLocked(GoalMeterError):
    pass


_SCHEMA = """
CREATE TABLE IF NOT EXISTS experiments (
    exp_id TEXT PRIMARY KEY,
    experiment_type TEXT NOT NULL,
    is_valid INTEGER NOT NULL DEFAULT 1,
    config_blob TEXT NOT NULL DEFAULT '',
    h_hw TEXT NOT NULL DEFAULT 'unknown',
    h_env TEXT NOT NULL DEFAULT 'unknown',
    h_run TEXT NOT NULL DEFAULT 'unknown'
);
CREATE TABLE IF NOT EXISTS runs (
    run_id TEXT PRIMARY KEY,
    exp_id TEXT NOT NULL REFERENCES experiments(exp_id) ON DELETE CASCADE,
    workflow_type TEXT NOT NULL,
    t_pre_ns INTEGER NOT NULL,
    t0_ns INTEGER NOT NULL,
    t1_ns INTEGER NOT NULL,
    t2_ns INTEGER NOT NULL,
    range_uj REAL NOT NULL,
    pid_ticks INTEGER NOT NULL,
    total_ticks INTEGER NOT NULL,
    drop_count INTEGER NOT NULL DEFAULT 0,
    e_pkg_uj REAL NOT NULL,
    e_pre_uj REAL NOT NULL,
    e_post_uj REAL NOT NULL,
    e_dyn_uj REAL,
    e_attr_uj REAL,
    e_planning_uj REAL,
    e_execution_uj REAL,
    e_synthesis_uj REAL,
    e_gap_uj REAL,
    e_retry_uj REAL,
    e_coordination_uj REAL,
    cf_planning_uj REAL,
    cf_execution_uj REAL,
    cf_synthesis_uj REAL,
    cf_gap_uj REAL,
    clamp_applied INTEGER,
    coverage_pct REAL,
    tier TEXT,
    max_unobserved_gap_ms REAL,
    n_samples INTEGER,
    mean_interval_ms REAL,
    pct_within_band REAL,
    max_gap_ms REAL,
    h_hw TEXT NOT NULL DEFAULT 'unknown',
    h_env TEXT NOT NULL DEFAULT 'unknown',
    h_run TEXT NOT NULL DEFAULT 'unknown',
    baseline_id TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS energy_samples (
    run_id TEXT NOT NULL REFERENCES runs(run_id) ON DELETE CASCADE,
    sample_start_ns INTEGER NOT NULL,
    sample_end_ns INTEGER NOT NULL,
    pkg_start_uj REAL NOT NULL,
    pkg_end_uj REAL NOT NULL,
    missed INTEGER NOT NULL DEFAULT 0
);
CREATE INDEX IF NOT EXISTS idx_samples_run ON energy_samples(run_id, sample_start_ns);
CREATE TABLE IF NOT EXISTS orchestration_events (
    event_id INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id TEXT NOT NULL REFERENCES runs(run_id) ON DELETE CASCADE,
    phase TEXT NOT NULL,
    event_type TEXT NOT NULL,
    start_time_ns INTEGER NOT NULL,
    end_time_ns INTEGER NOT NULL,
    attempt_index INTEGER NOT NULL,
    n_samples INTEGER,
    avg_power_mw REAL
);
CREATE TABLE IF NOT EXISTS goal_execution (
    goal_id TEXT PRIMARY KEY,
    exp_id TEXT NOT NULL REFERENCES experiments(exp_id) ON DELETE CASCADE,
    task_id TEXT NOT NULL,
    workflow_type TEXT NOT NULL,
    pair_key TEXT NOT NULL,
    total_energy_uj REAL,
    success INTEGER NOT NULL,
    n_attempts INTEGER NOT NULL,
    overhead_fraction REAL,
    orchestration_fraction REAL
);
CREATE TABLE IF NOT EXISTS goal_attempt (
    goal_id TEXT NOT NULL REFERENCES goal_execution(goal_id) ON DELETE CASCADE,
    run_id TEXT NOT NULL,
    attempt_index INTEGER NOT NULL,
    outcome TEXT NOT NULL,
    e_attr_uj REAL,
    PRIMARY KEY (goal_id, attempt_index)
);
CREATE TABLE IF NOT EXISTS baselines (
    baseline_id TEXT PRIMARY KEY,
    mean_power_w REAL NOT NULL,
    sigma_w REAL NOT NULL,
    n_windows_used INTEGER NOT NULL,
    n_windows_rejected INTEGER NOT NULL,
    window_s REAL NOT NULL,
    governor TEXT NOT NULL,
    turbo TEXT NOT NULL,
    affinity_pinned INTEGER NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS run_quality (
    run_id TEXT NOT NULL,
    flag TEXT NOT NULL,
    detail TEXT,
    PRIMARY KEY (run_id, flag)
);
CREATE TABLE IF NOT EXISTS methodology_registry (
    quantity TEXT PRIMARY KEY,
    formula_text TEXT NOT NULL,
    provenance_tier TEXT NOT NULL,
    paper_section TEXT NOT NULL
);
-- side-channel slots: schema reserved, no collectors implemented
CREATE TABLE IF NOT EXISTS perf_samples (
    run_id TEXT NOT NULL, sample_ns INTEGER NOT NULL,
    counter TEXT NOT NULL, value REAL
);
CREATE TABLE IF NOT EXISTS thermal_samples (
    run_id TEXT NOT NULL, sample_ns INTEGER NOT NULL,
    sensor TEXT NOT NULL, value_c REAL
);
CREATE TABLE IF NOT EXISTS locks (
    name TEXT PRIMARY KEY,
    acquired_at TEXT NOT NULL
);
"""

_REGISTRY_ROWS = [
    ("e_pkg", "package counter delta over [t0,t1]", "MEASURED", "S4.1"),
    ("e_baseline", "2-sigma-filtered idle window mean power x dt", "MEASURED", "S4.2"),
    ("e_dyn", "max(0, e_pkg - P_baseline*dt)", "CALCULATED", "S4.2"),
    ("f_cpu", "tick delta pid / tick delta total over [t0,t1]", "CALCULATED", "S4.3"),
    ("e_attr", "f_cpu * e_dyn", "CALCULATED", "S4.3"),
    ("e_overhead", "e_pre + e_post (outside [t0,t1])", "CALCULATED", "S8.4"),
    (
        "e_phase",
        "sample deltas pro-rata over phase windows, rescaled to e_attr",
        "INFERRED",
        "S4.4",
    ),
    ("coverage", "sampled span / (t1 - t0) within [t0,t1]", "CALCULATED", "S8.2"),
    ("epg", "sum of unit energy (all units) / successful units", "CALCULATED", "S6"),
    ("ooi", "epg_agentic / epg_linear on matched pairs", "CALCULATED", "S7"),
    ("tau_orch", "ooi - 1", "CALCULATED", "S7"),
    ("waste_pct", "failed-attempt energy / total energy", "CALCULATED", "S8.5"),
    ("success_rate", "successful units / all units", "MEASURED", "S8.2"),
    ("overhead_fraction", "(e_pre + e_post) / e_attr", "CALCULATED", "artifact-defined"),
    (
        "orchestration_fraction",
        "(planning + synthesis + gap) / e_attr",
        "CALCULATED",
        "artifact-defined",
    ),
]

_VALID_EXPERIMENTS = "e.is_valid = 1 AND e.experiment_type != 'debug'"
_CONSERVATION_OK = (
    "NOT EXISTS (SELECT 1 FROM goal_attempt vga JOIN run_quality vq "
    "ON vq.run_id = vga.run_id AND vq.flag = 'conservation_violation' "
    "WHERE vga.goal_id = ge.goal_id)"
)

TABLE_EXPORT_ORDER = {
    "experiments": "exp_id",
    "runs": "run_id",
    "energy_samples": "run_id, sample_start_ns",
    "orchestration_events": "run_id, start_time_ns, event_id",
    "goal_execution": "goal_id",
    "goal_attempt": "goal_id, attempt_index",
    "baselines": "baseline_id",
    "run_quality": "run_id, flag",
    "methodology_registry": "quantity",
    "perf_samples": "run_id, sample_ns",
    "thermal_samples": "run_id, sample_ns",
}

REPORT_KINDS = ("rq01", "rq02", "rq03", "rq04", "rq05", "rq06", "summary")


@dataclass
class Report:
    kind: str
    columns: list[str]
    rows: list[tuple]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join("" if v is None else str(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            [dict(zip(self.columns, row)) for row in self.rows], indent=2
        )


@dataclass
class EtlReport:
    exp_id: str
    n_runs: int
    n_flagged: int
    flags: list[tuple[str, str]]


def _baseline_from_row(row: sqlite3.Row) -> BaselineRecord:
    return BaselineRecord(
        mean_power_w=row["mean_power_w"],
        sigma_w=row["sigma_w"],
        n_windows_used=row["n_windows_used"],
        n_windows_rejected=row["n_windows_rejected"],
        window_s=row["window_s"],
        governor=row["governor"],
        turbo=row["turbo"],
        affinity_pinned=bool(row["affinity_pinned"]),
        created_at=row["created_at"],
        baseline_id=row["baseline_id"],
    )


class ExperimentStore:
    """Single-writer SQLite store for all measurement entities."""

    def __init__(self, path: str | Path = ":memory:") -> None:
        self.path = str(path)
        self.conn = sqlite3.connect(self.path)
        self.conn.row_factory = sqlite3.Row
        self.conn.execute("PRAGMA foreign_keys = ON")
        self.conn.executescript(_SCHEMA)
        self._seed_registry()
        self.conn.commit()

    def close(self) -> None:
        self.conn.close()

    def _seed_registry(self) -> None:
        self.conn.executemany(
            "INSERT OR IGNORE INTO methodology_registry VALUES (?, ?, ?, ?)",
            _REGISTRY_ROWS,
        )

    # -- locks ---------------------------------------------------------

    def acquire_lock(self, name: str = "measurement") -> None:
        try:
            self.conn.execute(
                "INSERT INTO locks (name, acquired_at) VALUES (?, ?)",
                (name, time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())),
            )
            self.conn.commit()
        except sqlite3.IntegrityError as exc:
            raise StoreLocked(f"lock {name!r} already held") from exc

    def release_lock(self, name: str = "measurement") -> None:
        self.conn.execute("DELETE FROM locks WHERE name = ?", (name,))
        self.conn.commit()

    # -- inserts -------------------------------------------------------

    def insert_baseline(self, record: BaselineRecord) -> None:
        self.conn.execute(
            "INSERT OR REPLACE INTO baselines VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
            (
                record.baseline_id,
                record.mean_power_w,
                record.sigma_w,
                record.n_windows_used,
                record.n_windows_rejected,
                record.window_s,
                record.governor,
                record.turbo,
                int(record.affinity_pinned),
                record.created_at,
            ),
        )
        self.conn.commit()

    def load_baseline(self, baseline_id: str) -> BaselineRecord:
        row = self.conn.execute(
            "SELECT * FROM baselines WHERE baseline_id = ?", (baseline_id,)
        ).fetchone()
        if row is None:
            raise MissingRawData(f"no baseline {baseline_id!r}")
        return _baseline_from_row(row)

    def latest_baseline_id(self) -> str | None:
        row = self.conn.execute(
            "SELECT baseline_id FROM baselines ORDER BY created_at DESC, baseline_id DESC LIMIT 1"
        ).fetchone()
        return row["baseline_id"] if row else None

    def insert_experiment(
        self,
        exp_id: str,
        experiment_type: str,
        config_blob: str,
        h_hw: str,
        h_env: str,
        h_run: str,
        is_valid: bool = True,
    ) -> None:
        # re-running the same deterministic experiment replaces it wholesale
        self.conn.execute(
            "DELETE FROM run_quality WHERE run_id IN"
            " (SELECT run_id FROM runs WHERE exp_id = ?)",
            (exp_id,),
        )
        self.conn.execute("DELETE FROM experiments WHERE exp_id = ?", (exp_id,))
        self.conn.execute(
            "INSERT INTO experiments VALUES (?, ?, ?, ?, ?, ?, ?)",
            (exp_id, experiment_type, int(is_valid), config_blob, h_hw, h_env, h_run),
        )
        self.conn.commit()

    def insert_unit(
        self,
        exp_id: str,
        run_id: str,
        goal_id: str,
        pair_key: str,
        unit: WorkflowUnit,
        baseline_id: str,
        h_hw: str = "unknown",
        h_env: str = "unknown",
        h_run: str = "unknown",
    ) -> None:
        """Raw persistence of one workflow unit and its measurement."""
        m = unit.measurement
        window = m.window()
        self.conn.execute(
            "INSERT INTO runs (run_id, exp_id, workflow_type, t_pre_ns, t0_ns, t1_ns,"
            " t2_ns, range_uj, pid_ticks, total_ticks, drop_count, e_pkg_uj, e_pre_uj,"
            " e_post_uj, h_hw, h_env, h_run, baseline_id)"
            " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
            (
                run_id,
                exp_id,
                unit.workflow_type.value,
                m.anchors.t_pre,
                m.anchors.t0,
                m.anchors.t1,
                m.anchors.t2,
                m.range_uj,
                m.ticks.pid_ticks,
                m.ticks.total_ticks,
                m.drop_count,
                window.e_task_uj,
                window.e_pre_uj,
                window.e_post_uj,
                h_hw,
                h_env,
                h_run,
                baseline_id,
            ),
        )
        self.conn.executemany(
            "INSERT INTO energy_samples VALUES (?, ?, ?, ?, ?, ?)",
            [
                (
                    run_id,
                    s.sample_start_ns,
                    s.sample_end_ns,
                    s.pkg_start_uj,
                    s.pkg_end_uj,
                    int(s.missed),
                )
                for s in m.intervals
            ],
        )
        event_rows = []
        for attempt in unit.attempts:
            event_rows.append(
                (
                    run_id,
                    attempt.outcome.value,
                    "attempt_window",
                    attempt.start_ns,
                    attempt.end_ns,
                    attempt.index,
                )
            )
            for window_ in attempt.phase_windows:
                event_rows.append(
                    (
                        run_id,
                        window_.phase.value,
                        "phase_window",
                        window_.start_ns,
                        window_.end_ns,
                        attempt.index,
                    )
                )
        self.conn.executemany(
            "INSERT INTO orchestration_events (run_id, phase, event_type,"
            " start_time_ns, end_time_ns, attempt_index) VALUES (?, ?, ?, ?, ?, ?)",
            event_rows,
        )
        self.conn.execute(
            "INSERT INTO goal_execution (goal_id, exp_id, task_id, workflow_type,"
            " pair_key, success, n_attempts) VALUES (?, ?, ?, ?, ?, ?, ?)",
            (
                goal_id,
                exp_id,
                unit.goal.task_id,
                unit.workflow_type.value,
                pair_key,
                int(unit.final_success),
                len(unit.attempts),
            ),
        )
        self.conn.executemany(
            "INSERT INTO goal_attempt (goal_id, run_id, attempt_index, outcome)"
            " VALUES (?, ?, ?, ?)",
            [(goal_id, run_id, a.index, a.outcome.value) for a in unit.attempts],
        )
        self.conn.commit()

    def persist_experiment(
        self,
        exp_id: str,
        experiment_type: str,
        config_blob: str,
        result: ExperimentResult,
        baseline: BaselineRecord,
        h_hw: str = "unknown",
        h_env: str = "unknown",
        h_run: str = "unknown",
        is_valid: bool = True,
    ) -> None:
        self.insert_baseline(baseline)
        self.insert_experiment(
            exp_id, experiment_type, config_blob, h_hw, h_env, h_run, is_valid
        )
        run_idx = 0
        for pair in result.units:
            for unit in (pair.agentic, pair.linear):
                run_id = f"{exp_id}-run{run_idx:04d}"
                goal_id = f"{exp_id}-{pair.pair_key}-{unit.workflow_type.value}"
                self.insert_unit(
                    exp_id,
                    run_id,
                    goal_id,
                    pair.pair_key,
                    unit,
                    baseline.baseline_id,
                    h_hw,
                    h_env,
                    h_run,
                )
                run_idx += 1

    def flag(self, run_id: str, flag: str, detail: str = "") -> None:
        self.conn.execute(
            "INSERT OR REPLACE INTO run_quality VALUES (?, ?, ?)", (run_id, flag, detail)
        )
        self.conn.commit()

    # -- ETL -----------------------------------------------------------

    def _load_intervals(self, run_id: str) -> list[SampleInterval]:
        rows = self.conn.execute(
            "SELECT * FROM energy_samples WHERE run_id = ? ORDER BY sample_start_ns",
            (run_id,),
        ).fetchall()
        return [
            SampleInterval(
                sample_start_ns=r["sample_start_ns"],
                sample_end_ns=r["sample_end_ns"],
                pkg_start_uj=r["pkg_start_uj"],
                pkg_end_uj=r["pkg_end_uj"],
                missed=bool(r["missed"]),
            )
            for r in rows
        ]

    def _load_windows(self, run_id: str) -> tuple[list[PhaseWindow], list[tuple[int, int]], list[sqlite3.Row]]:
        """Phase windows of the successful attempt, failed-attempt
        windows, and the attempt rows (ordered)."""
        attempt_rows = self.conn.execute(
            "SELECT * FROM orchestration_events WHERE run_id = ? AND"
            " event_type = 'attempt_window' ORDER BY attempt_index",
            (run_id,),
        ).fetchall()
        success_idx = {
            r["attempt_index"] for r in attempt_rows if r["phase"] == Outcome.SUCCESS.value
        }
        failed_windows = [
            (r["start_time_ns"], r["end_time_ns"])
            for r in attempt_rows
            if r["phase"] != Outcome.SUCCESS.value
        ]
        phase_rows = self.conn.execute(
            "SELECT * FROM orchestration_events WHERE run_id = ? AND"
            " event_type = 'phase_window' ORDER BY start_time_ns",
            (run_id,),
        ).fetchall()
        phases = [
            PhaseWindow(
                phase=Phase(r["phase"]),
                start_ns=r["start_time_ns"],
                end_ns=r["end_time_ns"],
                attempt_index=r["attempt_index"],
            )
            for r in phase_rows
            if r["attempt_index"] in success_idx
        ]
        return phases, failed_windows, attempt_rows

    def _etl_one_run(self, run: sqlite3.Row) -> None:
        run_id = run["run_id"]
        baseline = self.load_baseline(run["baseline_id"])
        intervals = self._load_intervals(run_id)
        phases, failed_windows, attempt_rows = self._load_windows(run_id)
        t0, t1 = run["t0_ns"], run["t1_ns"]
        range_uj = run["range_uj"]
        ticks = CpuTickDelta.from_counts(run["pid_ticks"], run["total_ticks"])
        if ticks.clamped:
            self.flag(run_id, "ticks_clamped", "pid ticks exceeded total ticks")

        # job 2 inputs: coverage and cadence are independent of attribution
        cov = coverage(intervals, t0, t1)
        tier = classify_tier(cov.coverage_pct)
        cadence_cols = (None, None, None, None)
        if len(intervals) >= 2:
            stats = cadence_stats(intervals)
            cadence_cols = (
                stats.n_samples,
                stats.mean_interval_ms,
                stats.pct_within_band,
                stats.max_gap_ms,
            )
        elif intervals:
            cadence_cols = (len(intervals), None, None, None)

        resolved = cov.coverage_pct >= 80.0
        result = attribute_run(
            run["e_pkg_uj"], baseline, ticks, intervals, phases,
            failed_windows, t0, t1, range_uj,
        )
        if result.clamp_applied:
            self.flag(run_id, "negative_clamp", "baseline exceeded package energy")
        if not resolved:
            self.flag(
                run_id, "low_coverage",
                f"coverage {cov.coverage_pct:.2f}% below acceptable tier",
            )

        phase_cols = (
            (
                result.phases.e_planning_uj,
                result.phases.e_execution_uj,
                result.phases.e_synthesis_uj,
                result.phases.e_gap_uj,
                result.e_retry_uj,
                result.e_coordination_uj,
                result.counterfactual.e_planning_uj,
                result.counterfactual.e_execution_uj,
                result.counterfactual.e_synthesis_uj,
                result.counterfactual.e_gap_uj,
            )
            if resolved
            else (None,) * 10
        )
        self.conn.execute(
            "UPDATE runs SET e_dyn_uj=?, e_attr_uj=?, e_planning_uj=?, e_execution_uj=?,"
            " e_synthesis_uj=?, e_gap_uj=?, e_retry_uj=?, e_coordination_uj=?,"
            " cf_planning_uj=?, cf_execution_uj=?, cf_synthesis_uj=?, cf_gap_uj=?,"
            " clamp_applied=?, coverage_pct=?, tier=?, max_unobserved_gap_ms=?,"
            " n_samples=?, mean_interval_ms=?, pct_within_band=?, max_gap_ms=?"
            " WHERE run_id=?",
            (
                result.e_dyn_uj,
                result.e_attr_uj,
                *phase_cols,
                int(result.clamp_applied),
                cov.coverage_pct,
                tier.value,
                cov.max_unobserved_gap_ms,
                *cadence_cols,
                run_id,
            ),
        )

        # job 1: per-event sample alignment (derived columns for rq03)
        for event in self.conn.execute(
            "SELECT event_id, start_time_ns, end_time_ns FROM orchestration_events"
            " WHERE run_id = ?",
            (run_id,),
        ).fetchall():
            contained = [
                s
                for s in intervals
                if not s.missed
                and s.sample_start_ns >= event["start_time_ns"]
                and s.sample_end_ns <= event["end_time_ns"]
            ]
            avg_power_mw = None
            if contained:
                powers = [
                    interval_energy_uj(s, range_uj)
                    / (s.sample_end_ns - s.sample_start_ns)
                    * 1e6
                    for s in contained
                    if s.sample_end_ns > s.sample_start_ns
                ]
                if powers:
                    avg_power_mw = sum(powers) / len(powers)
            self.conn.execute(
                "UPDATE orchestration_events SET n_samples=?, avg_power_mw=?"
                " WHERE event_id=?",
                (len(contained), avg_power_mw, event["event_id"]),
            )

        # job 3: per-attempt energies by tiling [t0, t1] at attempt ends,
        # so attempt energies partition e_attr exactly (conservation)
        raw_total = 0.0
        for s in intervals:
            if s.missed or s.sample_end_ns <= s.sample_start_ns:
                continue
            shared = min(s.sample_end_ns, t1) - max(s.sample_start_ns, t0)
            if shared > 0:
                raw_total += (
                    interval_energy_uj(s, range_uj)
                    * shared
                    / (s.sample_end_ns - s.sample_start_ns)
                )
        scale = result.e_attr_uj / raw_total if raw_total > 0 else 0.0
        boundaries = [t0]
        for row in attempt_rows[:-1]:
            boundaries.append(min(max(row["end_time_ns"], t0), t1))
        boundaries.append(t1)
        goal_row = self.conn.execute(
            "SELECT goal_id FROM goal_attempt WHERE run_id = ? LIMIT 1", (run_id,)
        ).fetchone()
        for i, row in enumerate(attempt_rows):
            lo = boundaries[i]
            hi = boundaries[i + 1] if i + 1 < len(boundaries) else t1
            raw_tile = 0.0
            for s in intervals:
                if s.missed or s.sample_end_ns <= s.sample_start_ns:
                    continue
                shared = min(s.sample_end_ns, hi) - max(s.sample_start_ns, lo)
                if shared > 0:
                    raw_tile += (
                        interval_energy_uj(s, range_uj)
                        * shared
                        / (s.sample_end_ns - s.sample_start_ns)
                    )
            energy = raw_tile * scale
            if raw_total <= 0 and len(attempt_rows) == 1:
                energy = result.e_attr_uj  # no samples: single attempt owns the total
            self.conn.execute(
                "UPDATE goal_attempt SET e_attr_uj=? WHERE goal_id=? AND attempt_index=?",
                (energy, goal_row["goal_id"], row["attempt_index"]),
            )

        e_attr = result.e_attr_uj
        overhead = (run["e_pre_uj"] + run["e_post_uj"]) / e_attr if e_attr > 0 else None
        orchestration = (
            (
                result.phases.e_planning_uj
                + result.phases.e_synthesis_uj
                + result.phases.e_gap_uj
            )
            / e_attr
            if resolved and e_attr > 0
            else None
        )
        self.conn.execute(
            "UPDATE goal_execution SET total_energy_uj=?, overhead_fraction=?,"
            " orchestration_fraction=? WHERE goal_id=?",
            (e_attr, overhead, orchestration, goal_row["goal_id"]),
        )

    def etl_run(self, exp_id: str) -> EtlReport:
        """Run the three derivation jobs for one experiment.

        Idempotent: derived columns are overwritten in place; raw rows
        are never touched. Per-run failures are flagged in run_quality
        and never abort the batch.
        """
        exp = self.conn.execute(
            "SELECT exp_id FROM experiments WHERE exp_id = ?", (exp_id,)
        ).fetchone()
        if exp is None:
            raise MissingRawData(f"no experiment {exp_id!r}")
        runs = self.conn.execute(
            "SELECT * FROM runs WHERE exp_id = ? ORDER BY run_id", (exp_id,)
        ).fetchall()
        flags: list[tuple[str, str]] = []
        for run in runs:
            try:
                self._etl_one_run(run)
            except GoalMeterError as exc:
                self.flag(run["run_id"], "etl_error", str(exc))
                flags.append((run["run_id"], str(exc)))
        self.conn.commit()
        for goal in self.conn.execute(
            "SELECT goal_id FROM goal_execution WHERE exp_id = ? ORDER BY goal_id",
            (exp_id,),
        ).fetchall():
            passed, residual = self.conservation_check(goal["goal_id"])
            if not passed:
                flags.append((goal["goal_id"], f"conservation residual {residual} uJ"))
        quality = self.conn.execute(
            "SELECT run_id, flag FROM run_quality WHERE run_id IN"
            " (SELECT run_id FROM runs WHERE exp_id = ?) ORDER BY run_id, flag",
            (exp_id,),
        ).fetchall()
        return EtlReport(
            exp_id=exp_id,
            n_runs=len(runs),
            n_flagged=len({r["run_id"] for r in quality}),
            flags=flags,
        )

    # -- conservation --------------------------------------------------

    def conservation_check(self, goal_id: str) -> tuple[bool, float]:
        """Goal-level energy conservation within 1 mJ; failures are
        flagged and excluded from every report function."""
        total_row = self.conn.execute(
            "SELECT total_energy_uj FROM goal_execution WHERE goal_id = ?", (goal_id,)
        ).fetchone()
        if total_row is None or total_row["total_energy_uj"] is None:
            raise MissingRawData(f"goal {goal_id!r} has no ETL totals")
        attempts = self.conn.execute(
            "SELECT run_id, e_attr_uj FROM goal_attempt WHERE goal_id = ?", (goal_id,)
        ).fetchall()
        attempt_sum = sum(r["e_attr_uj"] or 0.0 for r in attempts)
        residual = abs(attempt_sum - total_row["total_energy_uj"])
        passed = residual <= CONSERVATION_TOLERANCE_UJ
        if not passed and attempts:
            self.flag(
                attempts[0]["run_id"],
                "conservation_violation",
                f"goal {goal_id}: residual {residual:.1f} uJ",
            )
        return passed, residual

    # -- reports -------------------------------------------------------

    def report(self, kind: str, run_id: str | None = None) -> Report:
        """Research query library; reads derived columns only.

        Row ordering is bit-stable: each query carries an explicit
        ORDER BY over its output keys.
        """
        if kind not in REPORT_KINDS:
            raise UnknownReport(f"unknown report kind {kind!r}")
        handler = getattr(self, f"_report_{kind}")
        if kind == "rq03":
            return handler(run_id)
        return handler()

    def _report_rq01(self) -> Report:
        rows = self.conn.execute(
            f"""
            SELECT ge.workflow_type,
                   COUNT(*) AS n_goals,
                   ROUND(SUM(ge.success) * 1.0 / COUNT(*), 4) AS success_rate,
                   ROUND(AVG(ge.total_energy_uj) / 1e6, 3) AS avg_goal_energy_j,
                   ROUND(SUM(ge.total_energy_uj) / 1e6 / NULLIF(SUM(ge.success), 0), 3)
                       AS epg_j,
                   ROUND(AVG(ge.overhead_fraction), 4) AS avg_overhead_fraction,
                   ROUND(AVG(ge.orchestration_fraction), 4) AS avg_orchestration_fraction
            FROM goal_execution ge
            JOIN experiments e ON e.exp_id = ge.exp_id
            WHERE {_VALID_EXPERIMENTS} AND {_CONSERVATION_OK}
              AND ge.total_energy_uj IS NOT NULL
            GROUP BY ge.workflow_type
            ORDER BY ge.workflow_type
            """
        ).fetchall()
        return Report(
            kind="rq01",
            columns=[
                "workflow_type", "n_goals", "success_rate", "avg_goal_energy_j",
                "epg_j", "avg_overhead_fraction", "avg_orchestration_fraction",
            ],
            rows=[tuple(r) for r in rows],
        )

    def _report_rq02(self) -> Report:
        rows = self.conn.execute(
            f"""
            SELECT ag.pair_key,
                   ag.task_id,
                   ROUND(ag.total_energy_uj / 1e6, 3) AS epg_agentic_j,
                   ROUND(lin.total_energy_uj / 1e6, 3) AS epg_linear_j,
                   ROUND(ag.total_energy_uj / lin.total_energy_uj, 2) AS ooi
            FROM goal_execution ag
            JOIN goal_execution lin
              ON lin.pair_key = ag.pair_key
             AND lin.exp_id = ag.exp_id
             AND lin.workflow_type = 'linear'
            JOIN experiments e ON e.exp_id = ag.exp_id
            WHERE ag.workflow_type = 'agentic'
              AND {_VALID_EXPERIMENTS}
              AND ag.success = 1 AND lin.success = 1
              AND ag.total_energy_uj IS NOT NULL
              AND lin.total_energy_uj IS NOT NULL AND lin.total_energy_uj > 0
              AND {_CONSERVATION_OK.replace('ge.goal_id', 'ag.goal_id')}
              AND {_CONSERVATION_OK.replace('ge.goal_id', 'lin.goal_id')}
            ORDER BY ooi DESC, ag.pair_key
            """
        ).fetchall()
        return Report(
            kind="rq02",
            columns=["pair_key", "task_id", "epg_agentic_j", "epg_linear_j", "ooi"],
            rows=[tuple(r) for r in rows],
        )

    def _report_rq03(self, run_id: str | None) -> Report:
        if run_id is None:
            raise UnknownReport("rq03 requires a run_id")
        rows = self.conn.execute(
            """
            SELECT phase, attempt_index,
                   ROUND((end_time_ns - start_time_ns) / 1e6, 2) AS ms,
                   n_samples,
                   ROUND(avg_power_mw, 2) AS avg_power_mw
            FROM orchestration_events
            WHERE run_id = ? AND event_type = 'phase_window'
            ORDER BY start_time_ns
            """,
            (run_id,),
        ).fetchall()
        return Report(
            kind="rq03",
            columns=["phase", "attempt_index", "ms", "n_samples", "avg_power_mw"],
            rows=[tuple(r) for r in rows],
        )

    def _report_rq04(self) -> Report:
        rows = self.conn.execute(
            f"""
            SELECT r.workflow_type,
                   ROUND(AVG(r.e_attr_uj) / 1e6, 3) AS strict_epg_j,
                   ROUND(AVG(r.e_attr_uj + COALESCE(r.e_pre_uj, 0)) / 1e6, 3)
                       AS standard_epg_j,
                   ROUND(AVG(r.e_attr_uj + COALESCE(r.e_pre_uj, 0)
                             + COALESCE(r.e_post_uj, 0)) / 1e6, 3) AS loose_epg_j
            FROM runs r
            JOIN experiments e ON e.exp_id = r.exp_id
            WHERE {_VALID_EXPERIMENTS}
              AND r.e_attr_uj IS NOT NULL
              AND r.run_id NOT IN
                  (SELECT run_id FROM run_quality WHERE flag = 'conservation_violation')
            GROUP BY r.workflow_type
            ORDER BY r.workflow_type
            """
        ).fetchall()
        return Report(
            kind="rq04",
            columns=["workflow_type", "strict_epg_j", "standard_epg_j", "loose_epg_j"],
            rows=[tuple(r) for r in rows],
        )

    def _report_rq05(self) -> Report:
        rows = self.conn.execute(
            f"""
            SELECT ge.task_id, ge.workflow_type,
                   COUNT(*) AS n_reps,
                   ROUND(AVG(ge.total_energy_uj) / 1e6, 3) AS mean_epg_j,
                   ROUND(100.0 * (MAX(ge.total_energy_uj) - MIN(ge.total_energy_uj))
                         / AVG(ge.total_energy_uj), 2) AS range_pct
            FROM goal_execution ge
            JOIN experiments e ON e.exp_id = ge.exp_id
            WHERE {_VALID_EXPERIMENTS} AND {_CONSERVATION_OK}
              AND ge.total_energy_uj IS NOT NULL
            GROUP BY ge.task_id, ge.workflow_type
            HAVING COUNT(*) >= 3
            ORDER BY range_pct ASC, ge.task_id, ge.workflow_type
            """
        ).fetchall()
        return Report(
            kind="rq05",
            columns=["task_id", "workflow_type", "n_reps", "mean_epg_j", "range_pct"],
            rows=[tuple(r) for r in rows],
        )

    def _report_rq06(self) -> Report:
        rows = self.conn.execute(
            f"""
            SELECT SUM(CASE WHEN r.clamp_applied = 0 THEN 1 ELSE 0 END)
                       AS l1_valid_count,
                   COUNT(*) AS total_runs,
                   ROUND(100.0 * SUM(CASE WHEN r.clamp_applied = 0 THEN 1 ELSE 0 END)
                         / COUNT(*), 2) AS validity_pct,
                   ROUND(AVG(r.coverage_pct), 2) AS avg_coverage_pct,
                   SUM(CASE WHEN r.tier = 'gold' THEN 1 ELSE 0 END) AS gold_count,
                   SUM(CASE WHEN r.tier = 'acceptable' THEN 1 ELSE 0 END)
                       AS acceptable_count,
                   SUM(CASE WHEN r.tier = 'excluded' THEN 1 ELSE 0 END)
                       AS excluded_count
            FROM runs r
            JOIN experiments e ON e.exp_id = r.exp_id
            WHERE {_VALID_EXPERIMENTS} AND r.clamp_applied IS NOT NULL
            """
        ).fetchall()
        return Report(
            kind="rq06",
            columns=[
                "l1_valid_count", "total_runs", "validity_pct", "avg_coverage_pct",
                "gold_count", "acceptable_count", "excluded_count",
            ],
            rows=[tuple(r) for r in rows if r["total_runs"]],
        )

    def _report_summary(self) -> Report:
        doc = self.summary_document()
        rows = []
        for task in doc["tasks"]:
            for wt in ("agentic", "linear"):
                side = task[wt]
                rows.append(
                    (
                        task["task_id"],
                        wt,
                        side["n_goals"],
                        round(side["success_rate"], 4),
                        round(side["epg_j"], 3) if side["epg_j"] is not None else None,
                        round(task["ooi"], 3)
                        if wt == "agentic" and task["ooi"] is not None
                        else None,
                        round(task["ooi_lo95"], 3)
                        if wt == "agentic" and task["ooi_lo95"] is not None
                        else None,
                        round(task["ooi_hi95"], 3)
                        if wt == "agentic" and task["ooi_hi95"] is not None
                        else None,
                        round(side["waste_pct"], 2),
                        round(task["tau_orch"], 3)
                        if wt == "agentic" and task["tau_orch"] is not None
                        else None,
                    )
                )
        return Report(
            kind="summary",
            columns=[
                "task_id", "workflow_type", "n_goals", "success_rate", "epg_j",
                "ooi", "ooi_lo95", "ooi_hi95", "waste_pct", "tau_orch",
            ],
            rows=rows,
        )

    def summary_document(self) -> dict:
        """JSON summary: per-task metrics plus both overall OOI
        variants (ratio of mean EpGs, and mean of per-pair ratios)."""
        tasks = [
            r["task_id"]
            for r in self.conn.execute(
                f"""
                SELECT DISTINCT ge.task_id FROM goal_execution ge
                JOIN experiments e ON e.exp_id = ge.exp_id
                WHERE {_VALID_EXPERIMENTS} AND ge.total_energy_uj IS NOT NULL
                ORDER BY ge.task_id
                """
            ).fetchall()
        ]
        task_docs = []
        all_pairs: list[tuple[float, float]] = []
        for task_id in tasks:
            sides = {}
            for wt in ("agentic", "linear"):
                row = self.conn.execute(
                    f"""
                    SELECT COUNT(*) AS n, SUM(ge.success) AS wins,
                           SUM(ge.total_energy_uj) AS total
                    FROM goal_execution ge
                    JOIN experiments e ON e.exp_id = ge.exp_id
                    WHERE {_VALID_EXPERIMENTS} AND {_CONSERVATION_OK}
                      AND ge.task_id = ? AND ge.workflow_type = ?
                      AND ge.total_energy_uj IS NOT NULL
                    """,
                    (task_id, wt),
                ).fetchone()
                waste = self.conn.execute(
                    f"""
                    SELECT SUM(CASE WHEN ga.outcome != 'success'
                               THEN ga.e_attr_uj ELSE 0 END) AS failed,
                           SUM(ga.e_attr_uj) AS total
                    FROM goal_attempt ga
                    JOIN goal_execution ge ON ge.goal_id = ga.goal_id
                    JOIN experiments e ON e.exp_id = ge.exp_id
                    WHERE {_VALID_EXPERIMENTS} AND {_CONSERVATION_OK}
                      AND ge.task_id = ? AND ge.workflow_type = ?
                    """,
                    (task_id, wt),
                ).fetchone()
                n, wins = row["n"], row["wins"] or 0
                total = row["total"] or 0.0
                sides[wt] = {
                    "n_goals": n,
                    "success_rate": wins / n if n else 0.0,
                    "epg_j": total / 1e6 / wins if wins else None,
                    "waste_pct": 100.0 * (waste["failed"] or 0.0) / waste["total"]
                    if waste["total"]
                    else 0.0,
                }
            pair_rows = self.conn.execute(
                f"""
                SELECT ag.total_energy_uj AS a, lin.total_energy_uj AS l
                FROM goal_execution ag
                JOIN goal_execution lin ON lin.pair_key = ag.pair_key
                 AND lin.exp_id = ag.exp_id AND lin.workflow_type = 'linear'
                JOIN experiments e ON e.exp_id = ag.exp_id
                WHERE ag.workflow_type = 'agentic' AND {_VALID_EXPERIMENTS}
                  AND ag.task_id = ? AND ag.success = 1 AND lin.success = 1
                  AND ag.total_energy_uj IS NOT NULL
                  AND lin.total_energy_uj IS NOT NULL AND lin.total_energy_uj > 0
                ORDER BY ag.pair_key
                """,
                (task_id,),
            ).fetchall()
            pairs = [(r["a"], r["l"]) for r in pair_rows]
            all_pairs.extend(pairs)
            ooi_value = None
            lo = hi = None
            if sides["agentic"]["epg_j"] is not None and sides["linear"]["epg_j"]:
                ooi_value = sides["agentic"]["epg_j"] / sides["linear"]["epg_j"]
            if len(pairs) >= 2:
                ci = bootstrap_ci(pairs, "ooi_of_pairs")
                lo, hi = ci.lo95, ci.hi95
            task_docs.append(
                {
                    "task_id": task_id,
                    "agentic": sides["agentic"],
                    "linear": sides["linear"],
                    "ooi": ooi_value,
                    "ooi_lo95": lo,
                    "ooi_hi95": hi,
                    "tau_orch": ooi_value - 1.0 if ooi_value is not None else None,
                    "ooi_mean_of_pair_ratios": (
                        sum(a / l for a, l in pairs) / len(pairs) if pairs else None
                    ),
                }
            )
        overall = {
            "n_pairs": len(all_pairs),
            "ooi_ratio_of_means": (
                sum(a for a, _ in all_pairs) / sum(l for _, l in all_pairs)
                if all_pairs and sum(l for _, l in all_pairs) > 0
                else None
            ),
            "ooi_mean_of_pair_ratios": (
                sum(a / l for a, l in all_pairs) / len(all_pairs)
                if all_pairs
                else None
            ),
        }
        return {"tasks": task_docs, "overall": overall}

    # -- export / import -----------------------------------------------

    def export_attribution_csv(self) -> str:
        """Attribution ledger rows in the fixed documented column order."""
        columns = AttributionResult.CSV_COLUMNS
        rows = self.conn.execute(
            "SELECT run_id, e_pkg_uj, e_dyn_uj, e_attr_uj, e_planning_uj,"
            " e_execution_uj, e_synthesis_uj, e_gap_uj, e_retry_uj,"
            " e_coordination_uj, clamp_applied FROM runs ORDER BY run_id"
        ).fetchall()
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join("" if v is None else str(v) for v in row))
        return "\n".join(lines) + "\n"

    def export_table_csv(self, table: str) -> str:
        if table not in TABLE_EXPORT_ORDER:
            raise UnknownReport(f"unknown table {table!r}")
        order = TABLE_EXPORT_ORDER[table]
        cursor = self.conn.execute(f"SELECT * FROM {table} ORDER BY {order}")
        columns = [d[0] for d in cursor.description]
        lines = [",".join(columns)]
        for row in cursor.fetchall():
            lines.append(",".join("" if v is None else str(v) for v in row))
        return "\n".join(lines) + "\n"

    def export_bundle(self, directory: str | Path, exp_id: str | None = None) -> None:
        """Write a reconstructable fixture bundle: manifest.json plus
        the samples/events JSON Lines streams."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        where = "" if exp_id is None else " WHERE exp_id = ?"
        args = () if exp_id is None else (exp_id,)
        manifest: dict[str, list[dict]] = {}
        for table in ("experiments", "runs", "goal_execution", "baselines"):
            table_where = where if table != "baselines" else ""
            table_args = args if table != "baselines" else ()
            cursor = self.conn.execute(
                f"SELECT * FROM {table}{table_where} ORDER BY {TABLE_EXPORT_ORDER[table]}",
                table_args,
            )
            cols = [d[0] for d in cursor.description]
            manifest[table] = [dict(zip(cols, row)) for row in cursor.fetchall()]
        run_filter = (
            "" if exp_id is None
            else " WHERE goal_id IN (SELECT goal_id FROM goal_execution WHERE exp_id = ?)"
        )
        cursor = self.conn.execute(
            f"SELECT * FROM goal_attempt{run_filter} ORDER BY goal_id, attempt_index",
            args,
        )
        cols = [d[0] for d in cursor.description]
        manifest["goal_attempt"] = [dict(zip(cols, row)) for row in cursor.fetchall()]
        (directory / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True)
        )

        sample_filter = (
            "" if exp_id is None
            else " WHERE run_id IN (SELECT run_id FROM runs WHERE exp_id = ?)"
        )
        with open(directory / "samples.jsonl", "w") as handle:
            for row in self.conn.execute(
                "SELECT run_id, sample_start_ns, sample_end_ns, pkg_start_uj,"
                f" pkg_end_uj, missed FROM energy_samples{sample_filter}"
                " ORDER BY run_id, sample_start_ns",
                args,
            ):
                handle.write(
                    json.dumps(
                        {
                            "run_id": row["run_id"],
                            "sample_start_ns": row["sample_start_ns"],
                            "sample_end_ns": row["sample_end_ns"],
                            "pkg_start_uj": row["pkg_start_uj"],
                            "pkg_end_uj": row["pkg_end_uj"],
                            "missed": bool(row["missed"]),
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
        with open(directory / "events.jsonl", "w") as handle:
            for row in self.conn.execute(
                "SELECT run_id, phase, event_type, start_time_ns, end_time_ns,"
                f" attempt_index FROM orchestration_events{sample_filter}"
                " ORDER BY run_id, start_time_ns, event_id",
                args,
            ):
                handle.write(
                    json.dumps(
                        {
                            "run_id": row["run_id"],
                            "phase": row["phase"],
                            "event_type": row["event_type"],
                            "start_time_ns": row["start_time_ns"],
                            "end_time_ns": row["end_time_ns"],
                            "attempt_index": row["attempt_index"],
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )

    def import_bundle(self, directory: str | Path) -> list[str]:
        """Reconstruct experiments from an exported bundle; returns the
        imported experiment ids (ETL is re-run by the caller)."""
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        for row in manifest.get("baselines", []):
            self.conn.execute(
                "INSERT OR REPLACE INTO baselines VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                tuple(row[k] for k in (
                    "baseline_id", "mean_power_w", "sigma_w", "n_windows_used",
                    "n_windows_rejected", "window_s", "governor", "turbo",
                    "affinity_pinned", "created_at",
                )),
            )
        exp_ids = []
        for row in manifest.get("experiments", []):
            self.conn.execute("DELETE FROM experiments WHERE exp_id = ?", (row["exp_id"],))
            self.conn.execute(
                "INSERT INTO experiments VALUES (?, ?, ?, ?, ?, ?, ?)",
                tuple(row[k] for k in (
                    "exp_id", "experiment_type", "is_valid", "config_blob",
                    "h_hw", "h_env", "h_run",
                )),
            )
            exp_ids.append(row["exp_id"])
        run_columns = [
            "run_id", "exp_id", "workflow_type", "t_pre_ns", "t0_ns", "t1_ns", "t2_ns",
            "range_uj", "pid_ticks", "total_ticks", "drop_count", "e_pkg_uj",
            "e_pre_uj", "e_post_uj", "h_hw", "h_env", "h_run", "baseline_id",
        ]
        for row in manifest.get("runs", []):
            self.conn.execute(
                f"INSERT INTO runs ({', '.join(run_columns)}) VALUES"
                f" ({', '.join('?' * len(run_columns))})",
                tuple(row[k] for k in run_columns),
            )
        for row in manifest.get("goal_execution", []):
            self.conn.execute(
                "INSERT INTO goal_execution (goal_id, exp_id, task_id, workflow_type,"
                " pair_key, success, n_attempts) VALUES (?, ?, ?, ?, ?, ?, ?)",
                tuple(row[k] for k in (
                    "goal_id", "exp_id", "task_id", "workflow_type", "pair_key",
                    "success", "n_attempts",
                )),
            )
        for row in manifest.get("goal_attempt", []):
            self.conn.execute(
                "INSERT INTO goal_attempt (goal_id, run_id, attempt_index, outcome)"
                " VALUES (?, ?, ?, ?)",
                tuple(row[k] for k in ("goal_id", "run_id", "attempt_index", "outcome")),
            )
        for line in (directory / "samples.jsonl").read_text().splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            self.conn.execute(
                "INSERT INTO energy_samples VALUES (?, ?, ?, ?, ?, ?)",
                (
                    record["run_id"], record["sample_start_ns"], record["sample_end_ns"],
                    record["pkg_start_uj"], record["pkg_end_uj"], int(record["missed"]),
                ),
            )
        for line in (directory / "events.jsonl").read_text().splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            self.conn.execute(
                "INSERT INTO orchestration_events (run_id, phase, event_type,"
                " start_time_ns, end_time_ns, attempt_index) VALUES (?, ?, ?, ?, ?, ?)",
                (
                    record["run_id"], record["phase"], record["event_type"],
                    record["start_time_ns"], record["end_time_ns"],
                    record["attempt_index"],
                ),
            )
        self.conn.commit()
        return exp_ids
