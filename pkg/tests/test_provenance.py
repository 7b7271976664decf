import hashlib
import itertools

import pytest

from goalmeter.provenance import (
    ENV_KEYS,
    EnvFields,
    HardwareFields,
    HW_KEYS,
    MissingField,
    ProvenanceRecord,
    RunFields,
    Verdict,
    build_record,
    capture_provenance,
    diagnose,
    hash_fields,
)


def _hardware(**overrides):
    fields = dict(
        cpu_model="cpu-x", microcode="0x1", kernel="6.1.0", rapl_domains=("package",)
    )
    fields.update(overrides)
    return HardwareFields(**fields)


def _environment(**overrides):
    fields = dict(
        runtime_version="python-3.11.0",
        os_name="Linux",
        git_commit="abc123",
        git_dirty=False,
        framework_version="0.3.0",
        schema_version="1",
    )
    fields.update(overrides)
    return EnvFields(**fields)


def _record(hw=None, env=None, governor="powersave", turbo="enabled", baseline="b1"):
    return build_record(
        hw or _hardware(), env or _environment(), governor, turbo, baseline
    )


def test_hash_is_deterministic():
    a = hash_fields({"k1": "v1", "k2": "v2"}, ("k1", "k2"))
    b = hash_fields({"k2": "v2", "k1": "v1"}, ("k1", "k2"))
    assert a == b
    assert len(a) == 64


def test_hash_changes_when_any_field_flips():
    base = _record()
    flipped = _record(env=_environment(git_dirty=True))
    assert base.h_env != flipped.h_env
    assert base.h_run != flipped.h_run
    assert base.h_hw == flipped.h_hw


def test_hardware_digest_matches_independent_sha256():
    # reference oracle: hash the documented canonical byte string directly
    hw = HardwareFields(
        cpu_model="x", microcode="z", kernel="y", rapl_domains=("package",)
    )
    canonical = b"cpu_model=x\nkernel=y\nmicrocode=z\nrapl_domains=package"
    assert hash_fields(hw.canonical(), HW_KEYS) == hashlib.sha256(canonical).hexdigest()


def test_env_digest_matches_independent_sha256():
    env = _environment()
    canonical = (
        "extra=\n"
        "framework_version=0.3.0\n"
        "git_commit=abc123\n"
        "git_dirty=false\n"
        "os_name=Linux\n"
        "runtime_version=python-3.11.0\n"
        "schema_version=1"
    ).encode("utf-8")
    assert hash_fields(env.canonical(), ENV_KEYS) == hashlib.sha256(canonical).hexdigest()


def test_missing_field_raises():
    with pytest.raises(MissingField):
        hash_fields({"cpu_model": "x"}, HW_KEYS)


def test_short_ids_are_prefixes():
    record = _record()
    assert record.h_hw.startswith(record.short_hw)
    assert record.h_env.startswith(record.short_env)
    assert record.h_run.startswith(record.short_run)
    assert len(record.short_hw) == 16


def test_transitivity_hw_change_cascades_to_run():
    base = _record()
    hw_changed = _record(hw=_hardware(kernel="6.2.0"))
    assert base.h_hw != hw_changed.h_hw
    assert base.h_run != hw_changed.h_run
    assert base.h_env == hw_changed.h_env


def test_run_state_change_touches_run_only():
    base = _record(governor="powersave")
    changed = _record(governor="performance")
    assert base.h_hw == changed.h_hw
    assert base.h_env == changed.h_env
    assert base.h_run != changed.h_run


def test_capture_is_stable_on_one_host():
    a = capture_provenance(governor="g", turbo="t", baseline_id="b")
    b = capture_provenance(governor="g", turbo="t", baseline_id="b")
    assert a.h_hw == b.h_hw
    assert a.h_env == b.h_env
    assert a.h_run == b.h_run


def test_diagnose_identical_records_match():
    record = _record()
    verdict, fields = diagnose(record, record)
    assert verdict is Verdict.MATCH
    assert fields == []


def test_diagnose_baseline_drift():
    verdict, fields = diagnose(_record(baseline="b1"), _record(baseline="b2"))
    assert verdict is Verdict.RUN_STATE_DRIFT
    assert fields == ["baseline_id"]


def test_diagnose_kernel_drift_takes_precedence():
    a = _record()
    b = _record(
        hw=_hardware(kernel="9.9.9"),
        env=_environment(git_commit="zzz"),
        baseline="other",
    )
    verdict, fields = diagnose(a, b)
    assert verdict is Verdict.HW_DRIFT
    assert fields == ["kernel"]


def test_diagnose_ladder_exhaustive_eight_combinations():
    for hw_diff, env_diff, run_diff in itertools.product([False, True], repeat=3):
        a = _record()
        b = _record(
            hw=_hardware(microcode="0x2") if hw_diff else None,
            env=_environment(git_commit="fff") if env_diff else None,
            governor="performance" if run_diff else "powersave",
        )
        verdict, fields = diagnose(a, b)
        if hw_diff:
            expected = Verdict.HW_DRIFT
        elif env_diff:
            expected = Verdict.ENV_DRIFT
        elif run_diff:
            expected = Verdict.RUN_STATE_DRIFT
        else:
            expected = Verdict.MATCH
        assert verdict is expected, (hw_diff, env_diff, run_diff)
        if expected is Verdict.HW_DRIFT:
            assert fields == ["microcode"]
        elif expected is Verdict.ENV_DRIFT:
            assert fields == ["git_commit"]
        elif expected is Verdict.RUN_STATE_DRIFT:
            assert fields == ["governor"]


def test_json_round_trip_preserves_stored_digests():
    # a record captured elsewhere round-trips verbatim, including the
    # stored short hardware id of the originating campaign host
    stored_short = "ebe694229b1b9d87"
    record = _record()
    object.__setattr__(record, "h_hw", stored_short + "0" * 48)
    object.__setattr__(
        record,
        "run_state",
        RunFields(
            governor=record.run_state.governor,
            turbo=record.run_state.turbo,
            h_hw=record.h_hw,
            h_env=record.h_env,
            baseline_id=record.run_state.baseline_id,
        ),
    )
    loaded = ProvenanceRecord.from_json(record.to_json())
    assert loaded.short_hw == stored_short
    assert loaded == record
    verdict, _ = diagnose(loaded, record)
    assert verdict is Verdict.MATCH


def test_unknown_probe_values_still_hash():
    hw = HardwareFields(
        cpu_model="unknown", microcode="unknown", kernel="unknown",
        rapl_domains=("unknown",),
    )
    digest = hash_fields(hw.canonical(), HW_KEYS)
    assert len(digest) == 64
