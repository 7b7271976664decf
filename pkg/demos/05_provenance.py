"""Three-hash provenance: capture, mutate, and walk the ladder.

Every run binds to a hardware fingerprint, a software-environment
fingerprint, and a run-state fingerprint (which folds in the other
two). Comparing two records walks the ladder from the bottom: the
first differing hash names the drift class and the differing raw
fields are listed.
"""

from dataclasses import replace

from goalmeter.provenance import build_record, capture_provenance, diagnose


def main():
    record = capture_provenance(
        governor="powersave", turbo="enabled", baseline_id="b0ffee00"
    )
    print("captured on this host:")
    print(f"  hw  {record.short_hw}  ({record.hardware.cpu_model[:40]})")
    print(f"  env {record.short_env}  (commit {record.environment.git_commit[:12]},"
          f" dirty={record.environment.git_dirty})")
    print(f"  run {record.short_run}  (governor={record.run_state.governor})")

    mutations = {
        "identical capture": record,
        "new baseline id": build_record(
            record.hardware, record.environment,
            record.run_state.governor, record.run_state.turbo, "deadbeef00",
        ),
        "different git commit": build_record(
            record.hardware, replace(record.environment, git_commit="0000000"),
            record.run_state.governor, record.run_state.turbo,
            record.run_state.baseline_id,
        ),
        "different kernel": build_record(
            replace(record.hardware, kernel="0.0.0-hypothetical"),
            record.environment, record.run_state.governor,
            record.run_state.turbo, record.run_state.baseline_id,
        ),
    }
    print("\nladder verdicts against the captured record:")
    for label, other in mutations.items():
        verdict, fields = diagnose(record, other)
        detail = f" fields={fields}" if fields else ""
        print(f"  {label:<24} -> {verdict.value}{detail}")

    export = record.to_json()
    print(f"\nJSON export round-trips byte-stably ({len(export)} bytes);"
          " compare two exports with: goalmeter verify --a a.json --b b.json")


if __name__ == "__main__":
    main()
