"""Deterministic synthetic case study: 5 hospitals, 63 days, one epidemic wave."""

from __future__ import annotations

import math
from datetime import date

import numpy as np

from surgeplan.domain import (CapacityUnit, DemandInput, Hospital, ScenarioInstance,
                              SolveOptions, SURGE_LEVELS, TransferLimits)
from surgeplan.dynamics import census_from_flows, discretized_gamma_pmf
from surgeplan.domain import LosDistribution
from surgeplan.forecast import QuantileForecast

# capacity vs arrivals shares are deliberately mismatched so some hospitals
# run over baseline while the system as a whole stays just under it
_HOSPITALS = (
    ("H1", "Academic Medical Center", 0.17, 0.27),
    ("H2", "Community Hospital East", 0.10, 0.05),
    ("H3", "Academic Medical Center (Large)", 0.47, 0.37),
    ("H4", "Community Hospital North", 0.14, 0.20),
    ("H5", "Community Hospital West", 0.12, 0.11),
)

_DEFAULT_HORIZON = 63
_TARGET_ADMISSIONS = 350
_OCCUPANCY_CAP = 0.95
_LOS_SHAPE = 2.2
_LOS_SCALE = 4.0
_LOS_MAX = 21


def _draw_unit_sizes(rng: np.random.Generator, total: int) -> list[int]:
    """Partition `total` beds into unit-sized blocks (population mean ~9.4, sd ~6.6)."""
    sizes = []
    remaining = total
    while remaining > 0:
        size = int(round(rng.normal(9.4, 6.6)))
        size = max(2, min(size, 30))
        if remaining - size < 2:
            size = remaining
        sizes.append(size)
        remaining -= size
    return sizes


def _surge_level_plan(rng: np.random.Generator, surge_total: int) -> list[tuple[str, int]]:
    """Split surge beds across escalation levels level1..max."""
    levels = [lvl for lvl in SURGE_LEVELS if lvl != "baseline"]
    weights = np.array([0.35, 0.30, 0.20, 0.15])
    out = []
    remaining = surge_total
    for i, lvl in enumerate(levels):
        if remaining <= 0:
            break
        if i == len(levels) - 1:
            share = remaining
        else:
            share = min(remaining, max(2, int(round(surge_total * weights[i]))))
            if remaining - share < 2:
                share = remaining
        out.append((lvl, share))
        remaining -= share
    return out


def generate_synthetic_case_study(
    seed: int = 42,
    horizon: int = _DEFAULT_HORIZON,
    with_forecast: bool = False,
) -> ScenarioInstance:
    """Scenario shaped like a two-month COVID ICU wave across a 5-hospital system.

    Deterministic per seed. Calibrated so system peak census sits at 90-100% of
    baseline capacity and total admissions land within 10% of 350.

    with_forecast wraps each arrivals series in a quantile forecast (so robust
    solves work out of the box) instead of the plain observed series.
    """
    rng = np.random.default_rng(seed)
    T = horizon
    start = date(2021, 12, 15)

    total_admissions = int(rng.integers(_TARGET_ADMISSIONS - 15, _TARGET_ADMISSIONS + 16))
    peak_day = T * 28 // _DEFAULT_HORIZON
    cell_weights = np.zeros((len(_HOSPITALS), T))
    for i, (_, _, _, arrivals_share) in enumerate(_HOSPITALS):
        shift = rng.integers(-4, 5)
        sigma = rng.uniform(8.0, 12.0)
        t = np.arange(T)
        wave = np.exp(-0.5 * ((t - (peak_day + shift)) / sigma) ** 2) + 0.02
        cell_weights[i] = arrivals_share * wave
    probs = (cell_weights / cell_weights.sum()).reshape(-1)
    counts = rng.multinomial(total_admissions, probs).reshape(len(_HOSPITALS), T)

    pmf = discretized_gamma_pmf(_LOS_SHAPE, _LOS_SCALE, _LOS_MAX)
    los = LosDistribution(pmf=tuple(pmf.tolist()))

    census = {}
    for i, (hid, *_rest) in enumerate(_HOSPITALS):
        census[hid] = census_from_flows(counts[i].astype(float), los)
    system_census = np.sum([census[hid] for hid, *_ in _HOSPITALS], axis=0)
    peak_system = float(system_census.max())

    # size the system so peak occupancy of baseline lands just under the 95% cap
    baseline_total = int(math.ceil(peak_system / _OCCUPANCY_CAP))
    baselines = {}
    acc = 0
    for i, (hid, _, cap_share, _) in enumerate(_HOSPITALS):
        if i == len(_HOSPITALS) - 1:
            baselines[hid] = baseline_total - acc
        else:
            baselines[hid] = max(4, int(round(baseline_total * cap_share)))
            acc += baselines[hid]

    hospitals = []
    units = []
    for i, (hid, name, _, _) in enumerate(_HOSPITALS):
        hospitals.append(Hospital(id=hid, name=name))
        peak_h = float(census[hid].max())
        required_h = peak_h / _OCCUPANCY_CAP
        surge_total = max(int(math.ceil(required_h * 1.2)) - baselines[hid],
                          int(math.ceil(0.5 * baselines[hid])))
        rank = 1
        for size in _draw_unit_sizes(rng, baselines[hid]):
            units.append(CapacityUnit(
                id=f"{hid}-B{rank}", hospital=hid, beds=size, surge_level="baseline",
                priority_rank=rank, setup_days=0, teardown_days=0,
                reserve_cost_per_day=0.0, conversion_cost=1.0,
            ))
            rank += 1
        for lvl, lvl_beds in _surge_level_plan(rng, surge_total):
            lvl_idx = SURGE_LEVELS.index(lvl)
            for size in _draw_unit_sizes(rng, lvl_beds):
                units.append(CapacityUnit(
                    id=f"{hid}-S{rank}", hospital=hid, beds=size, surge_level=lvl,
                    priority_rank=rank,
                    setup_days=min(3, (lvl_idx + 1) // 2 + (1 if size > 12 else 0)),
                    teardown_days=1,
                    reserve_cost_per_day=round(0.2 * lvl_idx * size, 2),
                    conversion_cost=round(2.0 + 1.5 * lvl_idx, 2),
                ))
                rank += 1

    demand = {}
    for i, (hid, *_rest) in enumerate(_HOSPITALS):
        arrivals = tuple(float(v) for v in counts[i])
        if with_forecast:
            demand[hid] = DemandInput(
                kind="arrivals_forecast",
                forecast=_forecast_around(rng, hid, arrivals, start),
                los=los,
            )
        else:
            demand[hid] = DemandInput(kind="arrivals_series", arrivals=arrivals, los=los)

    options = SolveOptions(
        allow_transfers=False,
        robust=False,
        gamma1=0.05,
        gamma2=None,
        occupancy_fraction_cap=_OCCUPANCY_CAP,
        enforce_unit_order=False,
        w1=1.0,
        w4=2.0,
        transfer_limits=TransferLimits(),
        seed=seed,
    )
    return ScenarioInstance(
        name=f"synthetic-surge-{seed}",
        start_date=start,
        horizon=T,
        hospitals=tuple(hospitals),
        units=tuple(units),
        demand=demand,
        options=options,
    )


def _forecast_around(rng: np.random.Generator, hid: str, arrivals, start: date) -> QuantileForecast:
    """Quantile forecast whose median tracks the true arrivals with mild noise."""
    T = len(arrivals)
    truth = np.asarray(arrivals)
    median = np.maximum(0.0, truth + rng.normal(0.0, 0.5, T))
    spread = 1.0 + 0.35 * np.sqrt(np.maximum(median, 0.5))
    levels = (0.05, 0.25, 0.5, 0.75, 0.95)
    values = []
    for t in range(T):
        m = median[t]
        s = spread[t]
        row = (max(0.0, m - 1.645 * s), max(0.0, m - 0.674 * s), m, m + 0.674 * s, m + 1.645 * s)
        values.append(tuple(float(v) for v in row))
    from datetime import timedelta

    return QuantileForecast(
        hospital_id=hid, target="admissions",
        issue_date=start - timedelta(days=1),
        horizon_days=T, quantile_levels=levels, values=tuple(values),
    )
