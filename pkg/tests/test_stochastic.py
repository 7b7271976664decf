import math

import numpy as np
import pytest

from goalmeter.stochastic import (
    KOutOfRange,
    PopulationSpec,
    RetryModelParams,
    convergence_curve,
    epg_star,
    expected_workflow_energy,
    jensen_lower_bound,
    pmf_k,
    simulate,
    success_prob,
)


def _params(p, k_max=5, mu=100.0, sigma=0.0):
    dist = "lognormal" if sigma > 0 else "constant"
    return RetryModelParams(p=p, k_max=k_max, mu_e=mu, sigma_e=sigma, energy_dist=dist)


def test_pmf_certain_success():
    params = _params(1.0)
    assert pmf_k(params, 1) == 1.0
    assert all(pmf_k(params, k) == 0.0 for k in range(2, 6))


def test_pmf_half_probability_budget_five():
    params = _params(0.5)
    values = [pmf_k(params, k) for k in range(1, 6)]
    assert values == pytest.approx([0.5, 0.25, 0.125, 0.0625, 0.0625])
    assert sum(values) == pytest.approx(1.0, abs=1e-15)


def test_pmf_budget_one_absorbs_everything():
    assert pmf_k(_params(0.5, k_max=1), 1) == 1.0


def test_pmf_k_out_of_range():
    with pytest.raises(KOutOfRange):
        pmf_k(_params(0.5), 0)
    with pytest.raises(KOutOfRange):
        pmf_k(_params(0.5), 6)


def test_pmf_sums_to_one_on_grid():
    for p in np.linspace(0.01, 1.0, 10):
        for k_max in range(1, 11):
            params = _params(float(p), k_max=k_max)
            total = sum(pmf_k(params, k) for k in range(1, k_max + 1))
            assert abs(total - 1.0) < 1e-12


def test_success_prob_closed_form():
    assert success_prob(_params(1.0)) == 1.0
    assert success_prob(_params(0.5, k_max=5)) == pytest.approx(0.96875)
    assert success_prob(_params(1e-9, k_max=3)) == pytest.approx(0.0, abs=1e-8)


def test_expected_energy_against_pmf_sum():
    params = _params(0.5, k_max=5, mu=100.0)
    # oracle: direct sum over the truncated support
    oracle = sum(k * pmf_k(params, k) for k in range(1, 6)) * params.mu_e
    assert oracle == pytest.approx(193.75)
    assert expected_workflow_energy(params) == pytest.approx(oracle, rel=1e-12)


def test_expected_energy_certain_success():
    assert expected_workflow_energy(_params(1.0, mu=100.0)) == 100.0


def test_expected_energy_untruncated_limit():
    # k_max -> infinity gives mu/p
    value = expected_workflow_energy(_params(0.25, k_max=500, mu=100.0))
    assert value == pytest.approx(400.0, rel=1e-9)


def test_epg_star_degenerate_cancellation():
    spec = PopulationSpec.degenerate(_params(0.5, k_max=5, mu=100.0))
    assert epg_star(spec) == pytest.approx(200.0, rel=1e-12)


def test_epg_star_certain_success():
    assert epg_star(PopulationSpec.degenerate(_params(1.0, mu=100.0))) == 100.0


def test_epg_star_two_component_mixture():
    # component arithmetic: (100 + 193.75) / (1 + 0.96875)
    spec = PopulationSpec(
        components=(
            (0.5, _params(1.0, mu=100.0)),
            (0.5, _params(0.5, k_max=5, mu=100.0)),
        )
    )
    assert epg_star(spec) == pytest.approx(293.75 / 1.96875, rel=1e-12)


def test_epg_star_mixture_monte_carlo_oracle():
    spec = PopulationSpec(
        components=(
            (0.5, _params(1.0, mu=100.0)),
            (0.5, _params(0.5, k_max=5, mu=100.0)),
        )
    )
    result = simulate(spec, 200_000, seed=11)
    assert result.epg_hat == pytest.approx(epg_star(spec), rel=0.01)


def test_epg_star_independent_of_k_max_for_degenerate_population():
    values = [
        epg_star(PopulationSpec.degenerate(_params(0.3, k_max=k, mu=80.0)))
        for k in range(1, 11)
    ]
    for value in values[1:]:
        assert abs(value - values[0]) / values[0] < 1e-9


def test_epg_star_decreases_in_p():
    values = [
        epg_star(PopulationSpec.degenerate(_params(p, k_max=5, mu=100.0)))
        for p in np.linspace(0.05, 1.0, 20)
    ]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_jensen_bound_equality_for_degenerate():
    spec = PopulationSpec.degenerate(_params(0.5, mu=100.0))
    assert jensen_lower_bound(spec) == pytest.approx(epg_star(spec), rel=1e-12)


def test_jensen_bound_mixed_spec():
    spec = PopulationSpec(
        components=(
            (0.5, _params(1.0, mu=100.0)),
            (0.5, _params(0.5, k_max=5, mu=100.0)),
        )
    )
    bound = jensen_lower_bound(spec)
    assert bound == pytest.approx(100.0 / 0.75, rel=1e-12)
    assert bound <= epg_star(spec)


def test_jensen_bound_holds_on_random_specs():
    # bound hypothesis: components share mu_e and k_max, only p varies
    rng = np.random.Generator(np.random.PCG64(5))
    for _ in range(50):
        n = rng.integers(1, 5)
        weights = rng.dirichlet(np.ones(n))
        mu = float(rng.uniform(1.0, 500.0))
        k_max = int(rng.integers(1, 10))
        components = tuple(
            (float(w), _params(float(rng.uniform(0.05, 1.0)), k_max=k_max, mu=mu))
            for w in weights
        )
        spec = PopulationSpec(components=components)
        assert jensen_lower_bound(spec) <= epg_star(spec) + 1e-9


def test_simulate_certain_success_constant_energy():
    result = simulate(PopulationSpec.degenerate(_params(1.0, mu=100.0)), 10, seed=1)
    assert result.epg_hat == 100.0
    assert result.success_rate == 1.0
    assert result.attempt_histogram == {1: 10}


def test_simulate_degenerate_within_one_percent():
    spec = PopulationSpec.degenerate(_params(0.5, k_max=5, mu=100.0))
    result = simulate(spec, 100_000, seed=42)
    assert result.epg_hat == pytest.approx(200.0, rel=0.01)


def test_simulate_histogram_matches_pmf():
    params = _params(0.5, k_max=5)
    result = simulate(PopulationSpec.degenerate(params), 1_000_000, seed=9)
    for k in range(1, 6):
        freq = result.attempt_histogram.get(k, 0) / result.n
        assert abs(freq - pmf_k(params, k)) <= 0.005


def test_simulate_wald_consistency_within_3_sigma():
    params = _params(0.4, k_max=6, mu=50.0)
    spec = PopulationSpec.degenerate(params)
    n = 100_000
    from goalmeter.stochastic import _simulate_arrays

    arrays = _simulate_arrays(spec, n, seed=21)
    sample_mean = arrays.energies.mean()
    sample_sigma = arrays.energies.std()
    assert abs(sample_mean - expected_workflow_energy(params)) <= (
        3 * sample_sigma / math.sqrt(n)
    )


def test_simulate_negative_covariance_when_p_below_one():
    from goalmeter.stochastic import _simulate_arrays

    arrays = _simulate_arrays(
        PopulationSpec.degenerate(_params(0.3, k_max=4, mu=10.0)), 50_000, seed=3
    )
    cov = np.cov(arrays.energies, arrays.successes.astype(float))[0, 1]
    assert cov <= 0


def test_simulate_deterministic_under_seed():
    spec = PopulationSpec.degenerate(_params(0.5, k_max=5, mu=100.0, sigma=20.0))
    a = simulate(spec, 5000, seed=4)
    b = simulate(spec, 5000, seed=4)
    assert a.epg_hat == b.epg_hat
    assert a.attempt_histogram == b.attempt_histogram
    assert a.rng_algorithm == "numpy-pcg64"


def test_simulate_lognormal_mean_matches():
    spec = PopulationSpec.degenerate(_params(1.0, mu=100.0, sigma=30.0))
    result = simulate(spec, 200_000, seed=8)
    assert result.epg_hat == pytest.approx(100.0, rel=0.01)


def test_simulate_histogram_sums_to_n():
    result = simulate(
        PopulationSpec.degenerate(_params(0.5, k_max=5)), 12_345, seed=6
    )
    assert sum(result.attempt_histogram.values()) == 12_345


def test_convergence_zero_width_for_certain_constant_spec():
    spec = PopulationSpec.degenerate(_params(1.0, mu=100.0))
    rows = convergence_curve(spec, [10, 100, 1000], resamples=200, seed=1)
    for _, point, lo, hi in rows:
        assert point == 100.0
        assert lo == hi == 100.0


def test_convergence_half_width_contracts_like_sqrt_n():
    spec = PopulationSpec.degenerate(_params(0.5, k_max=5, mu=100.0))
    widths = []
    # average over seeds to stabilize the bootstrap-width ratio
    for seed in range(5):
        rows = convergence_curve(spec, [2000, 8000], resamples=400, seed=seed)
        widths.append([(hi - lo) / 2 for _, _, lo, hi in rows])
    ratios = [w[1] / w[0] for w in widths]
    mean_ratio = sum(ratios) / len(ratios)
    assert 0.4 <= mean_ratio <= 0.6  # 1/sqrt(4) = 0.5 with slack


def test_convergence_requires_increasing_grid():
    spec = PopulationSpec.degenerate(_params(1.0))
    with pytest.raises(ValueError):
        convergence_curve(spec, [100, 50])


def test_params_validation():
    with pytest.raises(ValueError):
        RetryModelParams(p=0.0)
    with pytest.raises(ValueError):
        RetryModelParams(p=1.2)
    with pytest.raises(ValueError):
        RetryModelParams(p=0.5, k_max=0)
    with pytest.raises(ValueError):
        PopulationSpec(components=((0.5, _params(0.5)),))  # weights must sum to 1
