"""Goal-level metrics: EpG, OOI, waste fraction, orchestration tax,
portfolio aggregation, and percentile-bootstrap confidence intervals.

EpG sums energy over every workflow unit (failures and abandonments
included) and divides by the number of successful units only, so
giving up never improves the reported figure. Degenerate cases are
explicit enum states, never NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import GoalMeterError


class PairingMismatch(GoalMeterError):
    pass


class DegenerateOoi(GoalMeterError):
    pass


class NoFiniteTasks(GoalMeterError):
    pass


class TooFewObservations(GoalMeterError):
    pass


class OoiStatus(str, Enum):
    FINITE = "finite"
    PLUS_INFINITY = "PLUS_INFINITY"  # linear succeeded, agentic never did
    ZERO = "ZERO"  # agentic succeeded, linear never did
    NOT_COMPUTED = "NOT_COMPUTED"  # both sides undefined


@dataclass(frozen=True)
class EpgResult:
    total_energy_uj: float
    n_success: int
    n_total: int
    epg_uj_per_goal: float | None
    success_rate: float
    pairing_key: tuple | None = None

    @property
    def defined(self) -> bool:
        return self.epg_uj_per_goal is not None

    def as_dict(self) -> dict:
        return {
            "total_energy_uj": self.total_energy_uj,
            "n_success": self.n_success,
            "n_total": self.n_total,
            "epg_uj_per_goal": self.epg_uj_per_goal
            if self.defined
            else "UNDEFINED",
            "success_rate": self.success_rate,
        }


@dataclass(frozen=True)
class OoiResult:
    status: OoiStatus
    ooi: float | None
    epg_agentic: EpgResult
    epg_linear: EpgResult

    def as_dict(self) -> dict:
        return {
            "status": self.status.value,
            "ooi": self.ooi if self.status is OoiStatus.FINITE else self.status.value,
            "epg_agentic": self.epg_agentic.as_dict(),
            "epg_linear": self.epg_linear.as_dict(),
        }


@dataclass(frozen=True)
class BootstrapCi:
    point: float
    lo95: float
    hi95: float
    n_resamples: int = 500
    seed: int = 42


@dataclass(frozen=True)
class PortfolioOoi:
    value: float
    n_tasks_used: int
    n_tasks_excluded: int


def _unit_energy_uj(unit) -> float:
    return sum(a.e_attr_uj for a in unit.attempts)


def _pairing_key(units) -> tuple:
    return tuple(
        sorted(
            (u.goal.task_id, u.goal.evaluator.kind.value, str(u.goal.expected))
            for u in units
        )
    )


def epg(units: Sequence) -> EpgResult:
    """Energy per successful goal over a set of workflow units.

    The numerator sums every unit, failed or abandoned ones included;
    the denominator counts units whose final attempt succeeded. With
    zero successes the value is UNDEFINED but total energy and success
    rate are still reported, never suppressed.
    """
    total = float(sum(_unit_energy_uj(u) for u in units))
    n_total = len(units)
    n_success = sum(1 for u in units if u.final_success)
    return EpgResult(
        total_energy_uj=total,
        n_success=n_success,
        n_total=n_total,
        epg_uj_per_goal=total / n_success if n_success else None,
        success_rate=n_success / n_total if n_total else 0.0,
        pairing_key=_pairing_key(units) if n_total else None,
    )


def ooi(agentic: EpgResult, linear: EpgResult) -> OoiResult:
    """Orchestration overhead: agentic EpG over matched linear EpG.

    Requires both results to come from the same goal set under the
    same evaluators (checked via the pairing key when both carry one).
    """
    if (
        agentic.pairing_key is not None
        and linear.pairing_key is not None
        and agentic.pairing_key != linear.pairing_key
    ):
        raise PairingMismatch("agentic and linear results cover different goal sets")
    if agentic.defined and linear.defined:
        return OoiResult(
            status=OoiStatus.FINITE,
            ooi=agentic.epg_uj_per_goal / linear.epg_uj_per_goal,
            epg_agentic=agentic,
            epg_linear=linear,
        )
    if not agentic.defined and linear.defined:
        status = OoiStatus.PLUS_INFINITY
    elif agentic.defined and not linear.defined:
        status = OoiStatus.ZERO
    else:
        status = OoiStatus.NOT_COMPUTED
    return OoiResult(status=status, ooi=None, epg_agentic=agentic, epg_linear=linear)


def waste_fraction(units: Sequence) -> float:
    """Share of total energy spent on attempts that did not succeed."""
    total = 0.0
    failed = 0.0
    for unit in units:
        for attempt in unit.attempts:
            total += attempt.e_attr_uj
            if attempt.outcome.value != "success":
                failed += attempt.e_attr_uj
    return failed / total if total > 0 else 0.0


def orchestration_tax(value: float | OoiResult) -> float:
    """OOI - 1: fractional overhead above parity (negative = dividend)."""
    if isinstance(value, OoiResult):
        if value.status is not OoiStatus.FINITE:
            raise DegenerateOoi(f"no orchestration tax for {value.status.value}")
        value = value.ooi
    return value - 1.0


def portfolio_ooi(tasks: Iterable[tuple[float | OoiResult, float]]) -> PortfolioOoi:
    """Energy-weighted mean OOI across task families.

    Each element is (ooi, total agentic energy). Degenerate-OOI tasks
    are excluded from the mean and counted in the report.
    """
    weighted = 0.0
    weight_sum = 0.0
    used = 0
    excluded = 0
    for value, energy in tasks:
        if isinstance(value, OoiResult):
            if value.status is not OoiStatus.FINITE:
                excluded += 1
                continue
            value = value.ooi
        weighted += value * energy
        weight_sum += energy
        used += 1
    if used == 0 or weight_sum <= 0:
        raise NoFiniteTasks("portfolio needs at least one finite-OOI task")
    return PortfolioOoi(
        value=weighted / weight_sum, n_tasks_used=used, n_tasks_excluded=excluded
    )


def bootstrap_ci(
    observations: Sequence,
    statistic: str,
    n_resamples: int = 500,
    seed: int = 42,
) -> BootstrapCi:
    """Percentile bootstrap 95% interval for a ratio-friendly statistic.

    statistic "mean_epg" treats observations as per-goal energies;
    "ooi_of_pairs" treats them as (agentic, linear) energy pairs and
    resamples the matched pair jointly, preserving within-pair
    correlation. The point estimate is evaluated on the full sample and
    reported separately from the interval.
    """
    if len(observations) < 2:
        raise TooFewObservations("bootstrap needs at least two observations")
    rng = np.random.Generator(np.random.PCG64(seed))
    if statistic == "mean_epg":
        data = np.asarray(observations, dtype=float)

        def stat(idx: np.ndarray) -> float:
            return float(data[idx].mean())

        point = float(data.mean())
    elif statistic == "ooi_of_pairs":
        pairs = np.asarray(observations, dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("ooi_of_pairs expects (agentic, linear) pairs")

        def stat(idx: np.ndarray) -> float:
            sample = pairs[idx]
            return float(sample[:, 0].sum() / sample[:, 1].sum())

        point = float(pairs[:, 0].sum() / pairs[:, 1].sum())
    else:
        raise ValueError(f"unknown statistic {statistic!r}")

    n = len(observations)
    stats = np.empty(n_resamples)
    for i in range(n_resamples):
        stats[i] = stat(rng.integers(0, n, size=n))
    return BootstrapCi(
        point=point,
        lo95=float(np.percentile(stats, 2.5)),
        hi95=float(np.percentile(stats, 97.5)),
        n_resamples=n_resamples,
        seed=seed,
    )
