"""Truncated-geometric retry model: closed forms and Monte-Carlo.

A workflow makes i.i.d. Bernoulli(p) attempts up to a budget of k_max,
stopping at the first success. The attempt count K is then truncated
geometric, workflow energy is the sum of per-attempt energies, and the
population energy-per-successful-goal is the ratio of expectations
E[E_wf] / E[success]. Simulation cross-checks every closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GoalMeterError

RNG_ALGORITHM = "numpy-pcg64"


class KOutOfRange(GoalMeterError):
    pass


class ZeroSuccessPopulation(GoalMeterError):
    pass


@dataclass(frozen=True)
class RetryModelParams:
    p: float
    k_max: int = 5
    mu_e: float = 100.0
    sigma_e: float = 0.0
    energy_dist: str = "constant"  # constant | lognormal

    def __post_init__(self) -> None:
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.mu_e < 0 or self.sigma_e < 0:
            raise ValueError("energy moments must be non-negative")
        if self.energy_dist not in ("constant", "lognormal"):
            raise ValueError(f"unknown energy_dist {self.energy_dist!r}")


@dataclass(frozen=True)
class PopulationSpec:
    components: tuple[tuple[float, RetryModelParams], ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("population needs at least one component")
        if any(w < 0 for w, _ in self.components):
            raise ValueError("weights must be non-negative")
        total = sum(w for w, _ in self.components)
        if abs(total - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")

    @classmethod
    def degenerate(cls, params: RetryModelParams) -> "PopulationSpec":
        return cls(components=((1.0, params),))


@dataclass(frozen=True)
class SimulationResult:
    n: int
    epg_hat: float | None
    success_rate: float
    attempt_histogram: dict[int, int]
    seed: int
    rng_algorithm: str = RNG_ALGORITHM

    def __post_init__(self) -> None:
        if sum(self.attempt_histogram.values()) != self.n:
            raise ValueError("attempt histogram must sum to n")


def pmf_k(params: RetryModelParams, k: int) -> float:
    """P(K = k): geometric truncated by absorbing the tail at k_max."""
    if not 1 <= k <= params.k_max:
        raise KOutOfRange(f"k={k} outside [1, {params.k_max}]")
    q = 1.0 - params.p
    if k == params.k_max:
        return q ** (params.k_max - 1)
    return q ** (k - 1) * params.p


def success_prob(params: RetryModelParams) -> float:
    return 1.0 - (1.0 - params.p) ** params.k_max


def expected_workflow_energy(params: RetryModelParams) -> float:
    """E[E_wf] = mu_e * E[K] = mu_e * (1 - (1-p)^k_max) / p (Wald)."""
    return params.mu_e * success_prob(params) / params.p


def epg_star(spec: PopulationSpec) -> float:
    """Population EpG: mixture mean workflow energy over mixture
    success probability. For a single-component population this
    collapses algebraically to mu_e / p, independent of k_max.
    """
    numerator = sum(w * expected_workflow_energy(c) for w, c in spec.components)
    denominator = sum(w * success_prob(c) for w, c in spec.components)
    if denominator <= 0:
        raise ZeroSuccessPopulation("no component has positive success probability")
    return numerator / denominator


def jensen_lower_bound(spec: PopulationSpec) -> float:
    """Convexity bound: E[mu_e] / mean(p) <= population EpG.

    Guaranteed when the population varies only in the per-attempt
    success probability (mu_e and k_max shared across components, the
    usual one-system-one-budget setting): expected attempts per goal
    decrease in p, so the covariance term has the right sign. With
    heterogeneous mu_e or budgets the inequality can fail and the
    value is only a reference point. Equality holds for a
    single-component population.
    """
    mean_mu = sum(w * c.mu_e for w, c in spec.components)
    mean_p = sum(w * c.p for w, c in spec.components)
    return mean_mu / mean_p


def _lognormal_params(mu: float, sigma: float) -> tuple[float, float]:
    variance_ln = np.log(1.0 + (sigma / mu) ** 2)
    return np.log(mu) - variance_ln / 2.0, np.sqrt(variance_ln)


def _draw_attempts(
    rng: np.random.Generator, params: RetryModelParams, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw (K, success) per goal via inverse-CDF on uniforms.

    G = ceil(log(1-U) / log(1-p)) is the untruncated first-success
    index; K = min(G, k_max) and the goal succeeds iff G <= k_max.
    """
    if params.p == 1.0:
        return np.ones(n, dtype=np.int64), np.ones(n, dtype=bool)
    u = rng.random(n)
    g = np.ceil(np.log1p(-u) / np.log1p(-params.p)).astype(np.int64)
    g = np.maximum(g, 1)
    k = np.minimum(g, params.k_max)
    return k, g <= params.k_max


def _draw_energies(
    rng: np.random.Generator, params: RetryModelParams, attempts: np.ndarray
) -> np.ndarray:
    """Per-goal workflow energy: sum of i.i.d. per-attempt energies."""
    if params.energy_dist == "constant" or params.sigma_e == 0.0:
        return attempts.astype(float) * params.mu_e
    mu_ln, sigma_ln = _lognormal_params(params.mu_e, params.sigma_e)
    draws = rng.lognormal(mu_ln, sigma_ln, int(attempts.sum()))
    offsets = np.concatenate(([0], np.cumsum(attempts)[:-1]))
    return np.add.reduceat(draws, offsets)


@dataclass
class _GoalArrays:
    energies: np.ndarray
    successes: np.ndarray
    attempts: np.ndarray


def _simulate_arrays(spec: PopulationSpec, n_goals: int, seed: int) -> _GoalArrays:
    rng = np.random.Generator(np.random.PCG64(seed))
    weights = np.array([w for w, _ in spec.components])
    component_idx = rng.choice(len(spec.components), size=n_goals, p=weights)
    energies = np.zeros(n_goals)
    successes = np.zeros(n_goals, dtype=bool)
    attempts = np.zeros(n_goals, dtype=np.int64)
    for idx, (_, params) in enumerate(spec.components):
        mask = component_idx == idx
        count = int(mask.sum())
        if count == 0:
            continue
        k, ok = _draw_attempts(rng, params, count)
        energies[mask] = _draw_energies(rng, params, k)
        successes[mask] = ok
        attempts[mask] = k
    return _GoalArrays(energies=energies, successes=successes, attempts=attempts)


def simulate(spec: PopulationSpec, n_goals: int, seed: int = 42) -> SimulationResult:
    """Monte-Carlo EpG estimate; deterministic under a fixed seed."""
    if n_goals < 1:
        raise ValueError("n_goals must be >= 1")
    arrays = _simulate_arrays(spec, n_goals, seed)
    n_success = int(arrays.successes.sum())
    histogram = {
        int(k): int(count)
        for k, count in enumerate(np.bincount(arrays.attempts))
        if k >= 1 and count > 0
    }
    return SimulationResult(
        n=n_goals,
        epg_hat=float(arrays.energies.sum() / n_success) if n_success else None,
        success_rate=n_success / n_goals,
        attempt_histogram=histogram,
        seed=seed,
    )


def _bootstrap_band(
    rng: np.random.Generator,
    energies: np.ndarray,
    successes: np.ndarray,
    resamples: int,
) -> tuple[float, float]:
    n = len(energies)
    stats = np.empty(resamples)
    for i in range(resamples):
        idx = rng.integers(0, n, size=n)
        wins = successes[idx].sum()
        stats[i] = energies[idx].sum() / wins if wins else np.inf
    return float(np.percentile(stats, 2.5)), float(np.percentile(stats, 97.5))


def convergence_curve(
    spec: PopulationSpec,
    n_grid: list[int],
    resamples: int = 500,
    seed: int = 42,
) -> list[tuple[int, float, float, float]]:
    """EpG estimates on nested subsamples with bootstrap 95% bands.

    Returns rows (N, epg_hat, ci_lo, ci_hi); the band half-width
    contracts like 1/sqrt(N) as the estimator converges.
    """
    if sorted(n_grid) != list(n_grid) or len(set(n_grid)) != len(n_grid):
        raise ValueError("n_grid must be strictly increasing")
    arrays = _simulate_arrays(spec, max(n_grid), seed)
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    rows = []
    for n in n_grid:
        energies = arrays.energies[:n]
        successes = arrays.successes[:n]
        wins = int(successes.sum())
        point = float(energies.sum() / wins) if wins else float("nan")
        lo, hi = _bootstrap_band(rng, energies, successes, resamples)
        rows.append((n, point, lo, hi))
    return rows
