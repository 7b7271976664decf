"""Operator entry point.

Subcommands: baseline, run, etl, report, simulate, verify, export,
import. Id-returning commands print exactly one machine-readable line
on stdout; every diagnostic goes to stderr. The store file is guarded
by an OS advisory lock so one command runs at a time per store.

Exit codes: 0 ok; 2 operational error (bad config, rejected baseline,
invalid parameters, unparseable input); 3 unknown report; 10/11/12
provenance ladder verdicts (run-state / environment / hardware drift);
64 usage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from .baseline import AllWindowsRejected, measure_baseline
from .config import ConfigError, parse_config
from .counters import ManualClock, NoPermission, NoSuchDomain, open_source
from .errors import GoalMeterError
from .harness import pick_harness
from .provenance import ProvenanceRecord, Verdict, capture_provenance, diagnose
from .stochastic import PopulationSpec, RetryModelParams, convergence_curve, simulate
from .store import (
    ExperimentStore,
    MissingRawData,
    StoreLocked,
    TABLE_EXPORT_ORDER,
    UnknownReport,
)
from .tasks import goals_for_task
from .workflow import run_paired_experiment

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_UNKNOWN_REPORT = 3
EXIT_RUN_DRIFT = 10
EXIT_ENV_DRIFT = 11
EXIT_HW_DRIFT = 12
EXIT_USAGE = 64

_VERDICT_EXIT = {
    Verdict.MATCH: EXIT_OK,
    Verdict.RUN_STATE_DRIFT: EXIT_RUN_DRIFT,
    Verdict.ENV_DRIFT: EXIT_ENV_DRIFT,
    Verdict.HW_DRIFT: EXIT_HW_DRIFT,
}


def _err(message: str) -> None:
    print(f"goalmeter: {message}", file=sys.stderr)


class _DbLock:
    """One command at a time per store file (advisory flock)."""

    def __init__(self, db_path: str) -> None:
        self._handle = None
        if db_path == ":memory:":
            return
        import fcntl

        self._handle = open(f"{db_path}.lock", "w")
        try:
            fcntl.flock(self._handle, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError as exc:
            raise StoreLocked(f"store {db_path} is in use by another command") from exc

    def release(self) -> None:
        if self._handle is not None:
            self._handle.close()


def _resolve_db(args: argparse.Namespace, parser: argparse.ArgumentParser) -> str:
    db = args.db or os.environ.get("GOALMETER_DB")
    if not db:
        parser.print_usage(sys.stderr)
        _err("--db is required (or set GOALMETER_DB)")
        raise SystemExit(EXIT_USAGE)
    return db


def cmd_baseline(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    db = _resolve_db(args, parser)
    lock = _DbLock(db)
    store = ExperimentStore(db)
    try:
        store.acquire_lock("measurement")
        try:
            clock = ManualClock() if str(args.source).startswith("synthetic") else None
            src = open_source(args.source, clock=clock)
            record = measure_baseline(src, n_windows=args.windows, window_s=args.window_s)
        finally:
            store.release_lock("measurement")
        store.insert_baseline(record)
        print(record.baseline_id)
        return EXIT_OK
    except AllWindowsRejected as exc:
        _err(str(exc))
        return EXIT_ERROR
    except (NoPermission, NoSuchDomain) as exc:
        _err(f"counter source unavailable: {exc}")
        return EXIT_ERROR
    finally:
        store.close()
        lock.release()


def cmd_run(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    db = _resolve_db(args, parser)
    try:
        config = parse_config(Path(args.config).read_text())
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return EXIT_ERROR
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_ERROR

    lock = _DbLock(db)
    store = ExperimentStore(db)
    try:
        baseline_id = args.baseline or store.latest_baseline_id()
        if baseline_id is None:
            _err("no baseline recorded; run `goalmeter baseline` first")
            return EXIT_ERROR
        baseline = store.load_baseline(baseline_id)

        clock = ManualClock() if config.source.kind == "synthetic" else None
        src = open_source(config.source, clock=clock)
        harness = pick_harness(src)
        goal_set = [goals_for_task(task_id) for task_id in config.tasks]

        prov = capture_provenance(
            governor=baseline.governor,
            turbo=baseline.turbo,
            baseline_id=baseline.baseline_id,
        )
        exp_id = "exp-" + hashlib.sha256(
            (config.raw_text + baseline.baseline_id + str(config.seed)).encode()
        ).hexdigest()[:12]

        store.acquire_lock("measurement")
        try:
            result = run_paired_experiment(
                goal_set,
                config.executors["agentic"],
                config.executors["linear"],
                config.retry_policy,
                config.failure_injection,
                harness,
                repetitions=config.execution.repetitions,
                cool_down_s=config.execution.cool_down_seconds,
            )
        finally:
            store.release_lock("measurement")

        if config.execution.save_db:
            store.persist_experiment(
                exp_id,
                config.study.experiment_type,
                config.raw_text,
                result,
                baseline,
                h_hw=prov.h_hw,
                h_env=prov.h_env,
                h_run=prov.h_run,
            )
            report = store.etl_run(exp_id)
            if report.flags:
                for key, detail in report.flags:
                    _err(f"etl flag on {key}: {detail}")
        print(exp_id)
        return EXIT_OK
    except (NoPermission, NoSuchDomain, MissingRawData, StoreLocked) as exc:
        _err(str(exc))
        return EXIT_ERROR
    finally:
        store.close()
        lock.release()


def cmd_etl(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    db = _resolve_db(args, parser)
    lock = _DbLock(db)
    store = ExperimentStore(db)
    try:
        report = store.etl_run(args.exp)
        print(
            json.dumps(
                {
                    "exp_id": report.exp_id,
                    "n_runs": report.n_runs,
                    "n_flagged": report.n_flagged,
                    "flags": report.flags,
                }
            )
        )
        return EXIT_OK
    except MissingRawData as exc:
        _err(str(exc))
        return EXIT_ERROR
    finally:
        store.close()
        lock.release()


def cmd_report(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    db = _resolve_db(args, parser)
    store = ExperimentStore(db)
    try:
        # derive any stale experiments before reporting
        stale = store.conn.execute(
            "SELECT DISTINCT exp_id FROM runs WHERE e_attr_uj IS NULL"
        ).fetchall()
        for row in stale:
            _err(f"running stale ETL for {row['exp_id']}")
            store.etl_run(row["exp_id"])
        if args.kind == "summary" and args.format == "json":
            print(json.dumps(store.summary_document(), indent=2))
            return EXIT_OK
        report = store.report(args.kind, run_id=args.run_id)
        if args.format == "json":
            print(report.to_json())
        else:
            sys.stdout.write(report.to_csv())
        return EXIT_OK
    except UnknownReport as exc:
        _err(str(exc))
        return EXIT_UNKNOWN_REPORT
    finally:
        store.close()


def cmd_simulate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        params = RetryModelParams(
            p=args.p,
            k_max=args.k_max,
            mu_e=args.mu_e,
            sigma_e=args.sigma_e,
            energy_dist="lognormal" if args.sigma_e > 0 else "constant",
        )
        spec = PopulationSpec.degenerate(params)
        if args.convergence:
            grid = sorted({max(2, args.n // (4**i)) for i in range(4)})
            rows = convergence_curve(spec, list(grid), seed=args.seed)
            print("n,epg_hat,ci_lo,ci_hi")
            for n, point, lo, hi in rows:
                print(f"{n},{point},{lo},{hi}")
        else:
            result = simulate(spec, args.n, seed=args.seed)
            print(
                json.dumps(
                    {
                        "n": result.n,
                        "epg_hat": result.epg_hat,
                        "success_rate": result.success_rate,
                        "attempt_histogram": result.attempt_histogram,
                        "seed": result.seed,
                        "rng_algorithm": result.rng_algorithm,
                    }
                )
            )
        return EXIT_OK
    except (ValueError, GoalMeterError) as exc:
        _err(f"invalid simulation parameters: {exc}")
        return EXIT_ERROR


def cmd_verify(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        record_a = ProvenanceRecord.from_json(Path(args.a).read_text())
        record_b = ProvenanceRecord.from_json(Path(args.b).read_text())
    except (OSError, KeyError, ValueError) as exc:
        _err(f"cannot parse provenance export: {exc}")
        return EXIT_ERROR
    verdict, fields = diagnose(record_a, record_b)
    print(verdict.value)
    for field in fields:
        print(field)
    return _VERDICT_EXIT[verdict]


def cmd_export(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    db = _resolve_db(args, parser)
    store = ExperimentStore(db)
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        store.export_bundle(out, exp_id=args.exp)
        tables_dir = out / "tables"
        tables_dir.mkdir(exist_ok=True)
        for table in TABLE_EXPORT_ORDER:
            (tables_dir / f"{table}.csv").write_text(store.export_table_csv(table))
        print(str(out))
        return EXIT_OK
    finally:
        store.close()


def cmd_import(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    db = _resolve_db(args, parser)
    lock = _DbLock(db)
    store = ExperimentStore(db)
    try:
        exp_ids = store.import_bundle(args.bundle)
        for exp_id in exp_ids:
            store.etl_run(exp_id)
        print(json.dumps(exp_ids))
        return EXIT_OK
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        _err(f"cannot import bundle: {exc}")
        return EXIT_ERROR
    finally:
        store.close()
        lock.release()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goalmeter",
        description="Goal-level energy metering for multi-step workflows",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("baseline", help="measure and persist an idle baseline")
    p.add_argument("--db", default=None)
    p.add_argument("--windows", type=int, default=10)
    p.add_argument("--window-s", dest="window_s", type=float, default=10.0)
    p.add_argument("--source", default="powercap")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("run", help="execute a paired experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--db", default=None)
    p.add_argument("--baseline", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("etl", help="re-run derivation jobs for an experiment")
    p.add_argument("--db", default=None)
    p.add_argument("--exp", required=True)
    p.set_defaults(func=cmd_etl)

    p = sub.add_parser("report", help="print a research query result")
    p.add_argument("--db", default=None)
    p.add_argument("--kind", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--run-id", dest="run_id", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="Monte-Carlo retry-model simulation")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--k-max", dest="k_max", type=int, default=5)
    p.add_argument("--mu-e", dest="mu_e", type=float, default=100.0)
    p.add_argument("--sigma-e", dest="sigma_e", type=float, default=0.0)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--convergence", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="compare two provenance exports")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="dump store tables and fixture bundle")
    p.add_argument("--db", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--exp", default=None)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("import", help="reconstruct a store from a bundle")
    p.add_argument("--db", default=None)
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=cmd_import)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, parser)
    except SystemExit as exc:  # argparse usage errors and _resolve_db
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    except StoreLocked as exc:
        _err(str(exc))
        return EXIT_ERROR
    except GoalMeterError as exc:
        _err(str(exc))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
