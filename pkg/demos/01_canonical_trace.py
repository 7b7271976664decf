"""Walk the canonical two-attempt trace through every attribution layer.

The shipped fixture is a 91.5 s agentic run (one injected failure, one
successful retry) plus an 8 s single-pass linear companion. This script
prints the full ledger: raw package energy, baseline subtraction,
process attribution, phase decomposition with the gap split, the
time-fraction counterfactual, and the final EpG / overhead ratio.
"""

from goalmeter.attribution import attribute_run
from goalmeter.boundary import coverage
from goalmeter.fixtures import build_canonical_pair


def ledger(tag, fixture, baseline):
    m = fixture.measurement
    window = m.window()
    result = attribute_run(
        window.e_task_uj, baseline, m.ticks, m.intervals, fixture.phases,
        fixture.failed_windows, m.anchors.t0, m.anchors.t1, m.range_uj,
    )
    cov = coverage(m.intervals, m.anchors.t0, m.anchors.t1)
    print(f"--- {tag} run ({len(m.intervals)} samples, "
          f"coverage {cov.coverage_pct:.1f}% / {cov.tier.value}) ---")
    print(f"  window [t0,t1]      {(m.anchors.t1 - m.anchors.t0) / 1e9:8.1f} s")
    print(f"  pre / post windows  {window.e_pre_uj / 1e6:10.4f} J "
          f"/ {window.e_post_uj / 1e6:.4f} J (recorded, never in EpG)")
    print(f"  L0 raw package      {result.e_pkg_uj / 1e6:10.1f} J")
    print(f"  L1 minus baseline   {result.e_dyn_uj / 1e6:10.1f} J "
          f"(idle {baseline.mean_power_w:.3f} W)")
    print(f"  L2 process share    {result.e_attr_uj / 1e6:10.1f} J "
          f"(f_cpu {m.ticks.pid_ticks}/{m.ticks.total_ticks})")
    print("  L3 phases (measured vs time-fraction counterfactual):")
    for name, got, cf in [
        ("planning", result.phases.e_planning_uj, result.counterfactual.e_planning_uj),
        ("execution", result.phases.e_execution_uj, result.counterfactual.e_execution_uj),
        ("synthesis", result.phases.e_synthesis_uj, result.counterfactual.e_synthesis_uj),
        ("gap", result.phases.e_gap_uj, result.counterfactual.e_gap_uj),
    ]:
        print(f"    {name:<10} {got / 1e6:8.1f} J   vs {cf / 1e6:8.1f} J")
    print(f"  gap split: retry {result.e_retry_uj / 1e6:.1f} J"
          f" + coordination {result.e_coordination_uj / 1e6:.1f} J")
    return result


def main():
    baseline, agentic, linear = build_canonical_pair()
    agentic_result = ledger("agentic", agentic, baseline)
    linear_result = ledger("linear", linear, baseline)
    epg_agentic = agentic_result.e_attr_uj / 1e6
    epg_linear = linear_result.e_attr_uj / 1e6
    print("--- goal level ---")
    print(f"  EpG agentic {epg_agentic:.1f} J/goal, linear {epg_linear:.1f} J/goal")
    print(f"  overhead ratio {epg_agentic / epg_linear:.1f}x "
          f"(tax {epg_agentic / epg_linear - 1:.1f} above parity)")
    share_v2 = 100 * agentic_result.phases.e_gap_uj / agentic_result.e_attr_uj
    share_v1 = 100 * agentic_result.counterfactual.e_gap_uj / agentic_result.e_attr_uj
    print(f"  gap share: measured {share_v2:.1f}% vs duration-proportional "
          f"{share_v1:.1f}% -- the counterfactual halves the visible retry cost")


if __name__ == "__main__":
    main()
