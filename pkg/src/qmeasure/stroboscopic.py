"""Stroboscopic measurement chains in the oscillator eigenbasis.

A plan fixes the quiescent interval, the number of measurements, the filter,
and the sequence of imposed results. Between measurements the state evolves
freely (diagonal phases); each imposed measurement multiplies the coefficient
vector by the filter's matrix at the imposed outcome. Scanning the n-th
measurement over candidate outcomes a gives the conditional distribution
P(a), its peak, and the effective uncertainty delta_a_eff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .collapse import OutcomeDistribution, outcome_distribution
from .oscillator import EigenState, free_phase_factors, position_moments
from .weights import FILTER_KINDS, WeightSpec, weight_matrix


class ChainUnderflowError(RuntimeError):
    """Imposed history so unlikely the chain norm underflowed."""


@dataclass(frozen=True)
class StroboscopicPlan:
    """Measurement schedule: N measurements separated by a fixed interval.

    `results` is either a policy name ("constant", "alternating") expanded
    with `result_value`, or an explicit sequence of at least N-1 outcomes
    imposed on measurements 1..N-1.
    """

    interval: float
    measurements: int
    filter_kind: str = "gaussian"
    error: float = 1.0
    results: str | tuple = "constant"
    result_value: float = 0.0

    def __post_init__(self):
        if self.interval <= 0:
            raise ValueError("interval must be positive")
        if self.measurements < 1:
            raise ValueError("measurements must be at least 1")
        if self.filter_kind not in FILTER_KINDS:
            raise ValueError(f"filter_kind must be one of {FILTER_KINDS}")
        if self.error <= 0:
            raise ValueError("error must be positive")
        if isinstance(self.results, str):
            if self.results not in ("constant", "alternating"):
                raise ValueError(f"unknown results policy {self.results!r}")
        else:
            seq = tuple(float(v) for v in self.results)
            if len(seq) < self.measurements - 1:
                raise ValueError(
                    f"need at least {self.measurements - 1} imposed results, got {len(seq)}"
                )
            object.__setattr__(self, "results", seq)

    def imposed_results(self) -> np.ndarray:
        """Outcomes imposed on measurements 1..N-1."""
        count = self.measurements - 1
        if isinstance(self.results, str):
            if self.results == "constant":
                return np.full(count, float(self.result_value))
            return float(self.result_value) * (-1.0) ** np.arange(count)
        return np.asarray(self.results[:count], dtype=float)


def qnd_commutator(basis, dt: float) -> float:
    """[x(t), x(t+dt)] magnitude (hbar/m omega) sin(omega dt); zero marks
    the back-action-free intervals."""
    return float(basis.hbar / (basis.mass * basis.omega) * np.sin(basis.omega * dt))


def _check_norm(norm_squared: float, n: int):
    if not norm_squared > 1e-200:
        raise ChainUnderflowError(
            f"chain norm underflowed after imposing measurement {n}"
        )


class _ChainWalker:
    """Shared bookkeeping: coefficient vector, phase factors, weight cache."""

    def __init__(self, plan: StroboscopicPlan, state: EigenState):
        self.plan = plan
        self.basis = state.basis
        self.coeffs = state.normalized().coefficients.copy()
        self.phases = free_phase_factors(state.basis, plan.interval)
        self.imposed = plan.imposed_results()
        self._matrices: dict[float, np.ndarray] = {}

    def weight(self, a: float) -> np.ndarray:
        key = float(a)
        if key not in self._matrices:
            spec = WeightSpec(self.plan.filter_kind, center=key, error=self.plan.error)
            self._matrices[key] = weight_matrix(self.basis, spec).matrix
        return self._matrices[key]

    def impose_and_advance(self, n: int):
        """Apply the imposed result of measurement n, then one free interval."""
        self.coeffs = self.phases * (self.weight(float(self.imposed[n - 1])) @ self.coeffs)
        _check_norm(self.norm_squared, n)

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def state(self) -> EigenState:
        return EigenState(self.basis, self.coeffs)


def _seeded_scan(state: EigenState, kind: str, error: float, points: int,
                 density_power: int, seed: float | None) -> OutcomeDistribution:
    """Outcome scan with a self-sizing window.

    The window spans 10x the expected uncertainty, seeded from the state's
    position variance (and the previous step's uncertainty when available);
    if the measured uncertainty disagrees with the window by more than 15%
    the scan runs once more at the corrected span.
    """
    mean, var = position_moments(state)
    guess = float(np.sqrt(error**2 + 2.0 * max(var, 0.0)))
    if seed is not None:
        guess = max(guess, seed)
    halfwidth = 10.0 * guess
    dist = outcome_distribution(state, error, kind=kind, points=points,
                                halfwidth=halfwidth, center=mean,
                                density_power=density_power)
    if abs(10.0 * dist.delta_a_eff - halfwidth) > 0.15 * halfwidth:
        dist = outcome_distribution(state, error, kind=kind, points=points,
                                    halfwidth=10.0 * dist.delta_a_eff, center=mean,
                                    density_power=density_power)
    return dist


@dataclass(frozen=True)
class ChainRecord:
    """Scan of the n-th measurement conditioned on the imposed history."""

    n: int
    delta_a_eff: float
    a_tilde: float
    norm_squared: float


def uncertainty_evolution(plan: StroboscopicPlan, state: EigenState, points: int = 801,
                          density_power: int = 2) -> list[ChainRecord]:
    """Scan every measurement of the plan in sequence.

    The record for n holds the effective uncertainty and peak of the n-th
    outcome distribution given results 1..n-1 imposed, plus the squared norm
    of the unnormalized conditioned state entering the scan.
    """
    walker = _ChainWalker(plan, state)
    records = []
    seed = None
    for n in range(1, plan.measurements + 1):
        dist = _seeded_scan(walker.state().normalized(), plan.filter_kind, plan.error,
                            points, density_power, seed)
        records.append(ChainRecord(n, dist.delta_a_eff, dist.a_tilde, walker.norm_squared))
        seed = dist.delta_a_eff
        if n < plan.measurements:
            walker.impose_and_advance(n)
    return records


def apply_chain(plan: StroboscopicPlan, state: EigenState, final_a: float) -> EigenState:
    """Unnormalized state after the full plan with the last outcome final_a.

    Imposes results 1..N-1 with free evolution in between, then applies the
    N-th filter at final_a (no evolution afterwards).
    """
    walker = _ChainWalker(plan, state)
    for n in range(1, plan.measurements):
        walker.impose_and_advance(n)
    coeffs = walker.weight(float(final_a)) @ walker.coeffs
    return EigenState(walker.basis, coeffs)


def _prefix_walker(plan: StroboscopicPlan, state: EigenState) -> _ChainWalker:
    walker = _ChainWalker(plan, state)
    for n in range(1, plan.measurements):
        walker.impose_and_advance(n)
    return walker


def nth_outcome_distribution(plan: StroboscopicPlan, state: EigenState, points: int = 801,
                             density_power: int = 2) -> OutcomeDistribution:
    """Outcome distribution of the final (N-th) measurement of the plan."""
    walker = _prefix_walker(plan, state)
    return _seeded_scan(walker.state().normalized(), plan.filter_kind, plan.error,
                        points, density_power, None)


@dataclass(frozen=True)
class AsymptoticResult:
    """Late-chain uncertainty, with a two-point stabilization check."""

    delta_a_eff: float
    a_tilde: float
    norm_squared: float
    stabilized: bool
    reference: float


def asymptotic_uncertainty(plan: StroboscopicPlan, state: EigenState, points: int = 801,
                           density_power: int = 2) -> AsymptoticResult:
    """Uncertainty of the last measurement, scanning only n = N-2 and n = N.

    Intermediate measurements are imposed without scanning, so a length-N
    chain costs two scans. `stabilized` requires the two scans to agree to
    1% relative; same-parity steps are compared so period-two orbits of the
    width (possible at quarter-period intervals) still count as stabilized.
    """
    walker = _ChainWalker(plan, state)
    reference = float("nan")
    for n in range(1, plan.measurements + 1):
        if n == plan.measurements - 2 and plan.measurements >= 3:
            ref_dist = _seeded_scan(walker.state().normalized(), plan.filter_kind,
                                    plan.error, points, density_power, None)
            reference = ref_dist.delta_a_eff
        if n < plan.measurements:
            walker.impose_and_advance(n)
    dist = _seeded_scan(walker.state().normalized(), plan.filter_kind, plan.error,
                        points, density_power,
                        reference if np.isfinite(reference) else None)
    stabilized = bool(np.isfinite(reference)
                      and abs(dist.delta_a_eff - reference) <= 0.01 * dist.delta_a_eff)
    return AsymptoticResult(dist.delta_a_eff, dist.a_tilde, walker.norm_squared,
                            stabilized, reference)


@dataclass(frozen=True)
class UncertaintyCurve:
    """Asymptotic uncertainty as a function of the quiescent interval."""

    intervals: np.ndarray
    values: np.ndarray
    a_tildes: np.ndarray
    norms: np.ndarray
    stabilized: np.ndarray
    period: float
    error: float
    filter_kind: str
    measurements: int

    @property
    def intervals_over_period(self) -> np.ndarray:
        return self.intervals / self.period

    def minima_indices(self) -> list[int]:
        """Local minima of the curve; endpoints compare against their one
        neighbor, interior points against both (ties allowed on the left)."""
        v = self.values
        out = []
        for i in range(len(v)):
            left_ok = i == 0 or v[i] <= v[i - 1]
            right_ok = i == len(v) - 1 or v[i] < v[i + 1]
            if left_ok and right_ok:
                out.append(i)
        return out


def sweep_quiescent_time(
    state: EigenState,
    intervals: Sequence[float],
    measurements: int = 16,
    filter_kind: str = "gaussian",
    error: float = 1.0,
    results: str | tuple = "constant",
    result_value: float = 0.0,
    points: int = 801,
    density_power: int = 2,
) -> UncertaintyCurve:
    """Asymptotic uncertainty over a grid of quiescent intervals."""
    intervals = np.asarray(intervals, dtype=float)
    values = np.empty_like(intervals)
    a_tildes = np.empty_like(intervals)
    norms = np.empty_like(intervals)
    stab = np.zeros(intervals.shape, dtype=bool)
    for i, dt in enumerate(intervals):
        plan = StroboscopicPlan(float(dt), measurements, filter_kind, error,
                                results, result_value)
        res = asymptotic_uncertainty(plan, state, points, density_power)
        values[i] = res.delta_a_eff
        a_tildes[i] = res.a_tilde
        norms[i] = res.norm_squared
        stab[i] = res.stabilized
    return UncertaintyCurve(intervals, values, a_tildes, norms, stab,
                            state.basis.period, error, filter_kind, measurements)
