"""Budget-of-uncertainty sets and coordinate-wise worst-case envelopes.

A band around a nominal trajectory admits scenarios x with
  x_t in [nominal_t - lower_width_t, nominal_t + upper_width_t] (clamped at 0),
  sum_t |x_t - nominal_t| <= gamma1 * sum_t nominal_t,
  |x_t - x_{t+1}| <= gamma2 * |nominal_t - nominal_{t+1}|   (skipped on flat steps).

Envelopes are the per-coordinate optima over this set, found by small LPs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from surgeplan.forecast import QuantileForecast
from surgeplan.domain import LosDistribution
from surgeplan import solver
from surgeplan.solver import EQ, LE, LinearModel

STEP_EPS = 1e-9


class InfeasibleSet(RuntimeError):
    pass


class SolverFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class UncertaintyBand:
    nominal: tuple[float, ...]
    lower_width: tuple[float, ...]
    upper_width: tuple[float, ...]
    gamma1: float = 0.0
    gamma2: Optional[float] = None

    @property
    def horizon(self) -> int:
        return len(self.nominal)

    def box_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        nom = np.asarray(self.nominal)
        lo = np.maximum(0.0, nom - np.asarray(self.lower_width))
        hi = nom + np.asarray(self.upper_width)
        return lo, hi

    def budget(self) -> float:
        return self.gamma1 * float(np.sum(self.nominal))

    def step_caps(self) -> list[Optional[float]]:
        """Per-step cap on |x_t - x_{t+1}|; None where the ratio constraint is skipped."""
        caps: list[Optional[float]] = []
        nom = self.nominal
        for t in range(len(nom) - 1):
            dstep = abs(nom[t] - nom[t + 1])
            if self.gamma2 is None or dstep <= STEP_EPS:
                caps.append(None)
            else:
                caps.append(self.gamma2 * dstep)
        return caps


@dataclass(frozen=True)
class Envelope:
    upper: tuple[float, ...]
    lower: tuple[float, ...]


def build_band_from_forecast(
    forecast: QuantileForecast,
    interval_level: float = 0.9,
    gamma1: float = 0.0,
    gamma2: Optional[float] = None,
) -> UncertaintyBand:
    """Band from a quantile forecast: nominal = median, widths from the central interval.

    Crossed quantiles yield negative widths, which are clamped to zero.
    """
    lo_level, hi_level = forecast.interval_levels(interval_level)
    median = np.asarray(forecast.median_series())
    q_lo = np.asarray(forecast.level_column(lo_level))
    q_hi = np.asarray(forecast.level_column(hi_level))
    lower = np.maximum(0.0, median - q_lo)
    upper = np.maximum(0.0, q_hi - median)
    return UncertaintyBand(
        nominal=tuple(median.tolist()),
        lower_width=tuple(lower.tolist()),
        upper_width=tuple(upper.tolist()),
        gamma1=gamma1,
        gamma2=gamma2,
    )


def _envelope_lp(band: UncertaintyBand) -> tuple[LinearModel, list[int]]:
    T = band.horizon
    lo, hi = band.box_bounds()
    nom = np.asarray(band.nominal)
    m = LinearModel()
    x = [m.add_variable(f"x{t}", lb=lo[t], ub=hi[t]) for t in range(T)]
    dev_up = [m.add_variable(f"du{t}", lb=0.0, ub=hi[t] - nom[t]) for t in range(T)]
    dev_dn = [m.add_variable(f"dd{t}", lb=0.0, ub=nom[t] - lo[t]) for t in range(T)]
    for t in range(T):
        m.add_constraint("link", {x[t]: 1.0, dev_up[t]: -1.0, dev_dn[t]: 1.0}, EQ, float(nom[t]))
    budget_coefs = {}
    for t in range(T):
        budget_coefs[dev_up[t]] = 1.0
        budget_coefs[dev_dn[t]] = 1.0
    m.add_constraint("budget", budget_coefs, LE, band.budget())
    for t, cap in enumerate(band.step_caps()):
        if cap is None:
            continue
        m.add_constraint("step_up", {x[t]: 1.0, x[t + 1]: -1.0}, LE, cap)
        m.add_constraint("step_dn", {x[t]: -1.0, x[t + 1]: 1.0}, LE, cap)
    return m, x


def worst_case_envelope(band: UncertaintyBand, direction: str = "max",
                        backend: Optional[str] = None) -> np.ndarray:
    """Coordinate-wise optimum of x_t over the set, one small LP per coordinate."""
    if direction not in ("max", "min"):
        raise ValueError("direction must be 'max' or 'min'")
    T = band.horizon
    base, xvars = _envelope_lp(band)
    sign = -1.0 if direction == "max" else 1.0
    out = np.zeros(T)
    for t in range(T):
        base.objective = {xvars[t]: sign}
        res = solver.solve_lp(base, backend)
        if res.status == "infeasible":
            raise InfeasibleSet("uncertainty set is empty (inconsistent widths)")
        if res.status != "optimal":
            raise SolverFailure(f"envelope LP returned {res.status}")
        out[t] = res.x[xvars[t]]
    return out


def compute_envelope(band: UncertaintyBand, backend: Optional[str] = None) -> Envelope:
    upper = worst_case_envelope(band, "max", backend)
    lower = np.maximum(0.0, worst_case_envelope(band, "min", backend))
    return Envelope(upper=tuple(upper.tolist()), lower=tuple(lower.tolist()))


def greedy_envelope(band: UncertaintyBand, direction: str = "max") -> np.ndarray:
    """Exact envelope when the step-ratio budget is disabled: each coordinate can
    spend the whole deviation budget alone, limited only by its box bound."""
    if band.gamma2 is not None:
        raise ValueError("greedy envelope is only exact without a step-ratio budget")
    nom = np.asarray(band.nominal)
    lo, hi = band.box_bounds()
    budget = band.budget()
    if direction == "max":
        return np.minimum(hi, nom + budget)
    return np.maximum(lo, nom - budget)


def sample_members(band: UncertaintyBand, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n members of the set by scaling random box perturbations until every
    budget holds; membership is by construction, independent of the envelope LPs."""
    T = band.horizon
    nom = np.asarray(band.nominal)
    lo, hi = band.box_bounds()
    caps = band.step_caps()
    budget = band.budget()
    out = np.zeros((n, T))
    for i in range(n):
        z = rng.uniform(lo - nom, hi - nom)
        lam = 1.0
        total = float(np.sum(np.abs(z)))
        if total > 0:
            lam = min(lam, budget / total)
        for t, cap in enumerate(caps):
            if cap is None:
                continue
            dz = abs(z[t] - z[t + 1])
            dnom = abs(nom[t] - nom[t + 1])
            # |dnom ± lam*dz| <= cap is guaranteed when lam*dz <= cap - dnom
            room = cap - dnom
            if dz > 1e-12:
                lam = min(lam, max(0.0, room) / dz)
        scale = lam if i % 4 == 0 else lam * rng.uniform(0.0, 1.0)
        out[i] = nom + scale * z
    return out


@dataclass(frozen=True)
class RobustArrivalsBound:
    """Worst-case arrivals envelopes plus the survival weights that turn
    (arrivals + net transfers) into a census upper bound inside the MILP."""

    arrivals_upper: tuple[float, ...]
    arrivals_lower: tuple[float, ...]
    survival: tuple[float, ...]

    def worst_case_census(self, net_transfers: Optional[Sequence[float]] = None,
                          initial_decay: Optional[Sequence[float]] = None) -> np.ndarray:
        T = len(self.arrivals_upper)
        a = np.asarray(self.arrivals_upper, dtype=float)
        if net_transfers is not None:
            a = a + np.asarray(net_transfers, dtype=float)
        o = np.convolve(a, np.asarray(self.survival))[:T]
        if initial_decay is not None:
            o = o + np.asarray(initial_decay)[:T]
        return o


def robust_census_bound(band_on_arrivals: UncertaintyBand, los: LosDistribution,
                        backend: Optional[str] = None) -> RobustArrivalsBound:
    """Envelopes for arrivals: the upper feeds the census expression, the lower
    caps outgoing transfers."""
    env = compute_envelope(band_on_arrivals, backend)
    T = band_on_arrivals.horizon
    return RobustArrivalsBound(
        arrivals_upper=env.upper,
        arrivals_lower=env.lower,
        survival=los.survival_curve(T),
    )
