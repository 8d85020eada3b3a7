"""Shared scenario builders for the test suite."""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np

from surgeplan.domain import (CapacityUnit, DemandInput, Hospital, LosDistribution,
                              ScenarioInstance, SolveOptions, SURGE_LEVELS, TransferLimits)
from surgeplan.forecast import QuantileForecast

START = date(2022, 1, 1)

# dyadic pmfs keep census values exactly representable, so the enumeration
# oracle and the MILP see bit-identical demand
DYADIC_PMFS = (
    (0.0, 1.0),
    (1.0,),
    (0.5, 0.5),
    (0.0, 0.5, 0.5),
    (0.25, 0.5, 0.25),
    (0.0, 0.75, 0.25),
)


def simple_scenario(census=(1.0, 2.0, 3.0), beds=5, **options) -> ScenarioInstance:
    T = len(census)
    return ScenarioInstance(
        name="toy", start_date=START, horizon=T,
        hospitals=(Hospital("A"),),
        units=(CapacityUnit("A1", "A", beds, priority_rank=1),),
        demand={"A": DemandInput(kind="census_series", census=tuple(float(v) for v in census))},
        options=SolveOptions(**options),
    )


def two_hospital_transfer_fixture() -> ScenarioInstance:
    """TF-1: demand concentrated at A; B has slack; two transfers avoid A's surge unit."""
    los = LosDistribution(pmf=(0.0, 1.0))  # every stay is exactly one day
    return ScenarioInstance(
        name="TF-1", start_date=START, horizon=4,
        hospitals=(Hospital("A"), Hospital("B")),
        units=(
            CapacityUnit("A-base", "A", 2, surge_level="baseline", priority_rank=1,
                         conversion_cost=1.0),
            CapacityUnit("A-surge", "A", 2, surge_level="level1", priority_rank=2,
                         reserve_cost_per_day=2.0, conversion_cost=3.0),
            CapacityUnit("B-base", "B", 3, surge_level="baseline", priority_rank=1,
                         conversion_cost=1.0),
        ),
        demand={
            "A": DemandInput(kind="arrivals_series", arrivals=(3.0, 3.0, 1.0, 0.0), los=los),
            "B": DemandInput(kind="arrivals_series", arrivals=(1.0, 1.0, 0.0, 0.0), los=los),
        },
        options=SolveOptions(
            allow_transfers=True, w1=1.0, w4=1.0,
            transfer_limits=TransferLimits(total=3),
        ),
    )


def unit_order_fixture() -> ScenarioInstance:
    """UO-1: three units of distinct sizes; demand ramps to force escalation."""
    return ScenarioInstance(
        name="UO-1", start_date=START, horizon=5,
        hospitals=(Hospital("A"),),
        units=(
            CapacityUnit("U1", "A", 5, surge_level="baseline", priority_rank=1),
            CapacityUnit("U2", "A", 3, surge_level="level1", priority_rank=2,
                         reserve_cost_per_day=1.0, conversion_cost=2.0),
            CapacityUnit("U3", "A", 2, surge_level="level2", priority_rank=3,
                         reserve_cost_per_day=2.0, conversion_cost=2.0),
        ),
        demand={"A": DemandInput(kind="census_series", census=(2.0, 4.0, 6.0, 9.0, 7.0))},
        options=SolveOptions(enforce_unit_order=True, w1=1.0),
    )


def random_tiny_scenario(rng: np.random.Generator) -> ScenarioInstance:
    """Instance inside the enumeration oracle's bounds, with integer costs."""
    n_hospitals = int(rng.integers(1, 3))
    transfers = bool(rng.random() < 0.5) and n_hospitals == 2
    T = int(rng.integers(3, 6 if transfers else 7))
    max_units = 2 if transfers else 3
    hospitals = []
    units = []
    demand = {}
    for i in range(n_hospitals):
        hid = f"H{i}"
        hospitals.append(Hospital(hid))
        n_units = int(rng.integers(1, max_units + 1))
        levels = sorted(rng.integers(0, len(SURGE_LEVELS), n_units))
        for k in range(n_units):
            units.append(CapacityUnit(
                id=f"{hid}-U{k}", hospital=hid, beds=int(rng.integers(1, 5)),
                surge_level=SURGE_LEVELS[levels[k]], priority_rank=k + 1,
                setup_days=int(rng.integers(0, 3)), teardown_days=int(rng.integers(0, 3)),
                reserve_cost_per_day=float(rng.integers(0, 3)) if levels[k] else 0.0,
                conversion_cost=float(rng.integers(0, 4)),
            ))
        if transfers or rng.random() < 0.5:
            pmf = DYADIC_PMFS[int(rng.integers(0, len(DYADIC_PMFS)))]
            demand[hid] = DemandInput(
                kind="arrivals_series",
                arrivals=tuple(float(v) for v in rng.integers(0, 4, T)),
                los=LosDistribution(pmf=pmf),
                initial_census=float(rng.integers(0, 3)),
            )
        else:
            demand[hid] = DemandInput(
                kind="census_series",
                census=tuple(float(v) for v in rng.integers(0, 7, T)),
            )

    limits = TransferLimits()
    if transfers:
        per_h = {}
        if rng.random() < 0.3:
            per_h[hospitals[0].id] = int(rng.integers(1, 4))
        limits = TransferLimits(total=int(rng.integers(0, 4)), per_hospital=per_h)
    initial_state = {}
    for u in units:
        if rng.random() < 0.2:
            initial_state[u.id] = True
    z = [None, 0.75, 0.9][int(rng.integers(0, 3))]
    zp = [None, 1.0][int(rng.integers(0, 2))]
    options = SolveOptions(
        allow_transfers=transfers,
        enforce_unit_order=bool(rng.random() < 0.3),
        occupancy_fraction_cap=z,
        occupancy_headroom=zp,
        w1=float(rng.integers(0, 3)),
        w4=float(rng.integers(0, 4)),
        transfer_limits=limits,
        initial_unit_state=initial_state,
    )
    return ScenarioInstance(
        name="tiny", start_date=START, horizon=T,
        hospitals=tuple(hospitals), units=tuple(units), demand=demand, options=options,
    )


def random_medium_scenario(rng: np.random.Generator, robust: bool = False,
                           transfers: bool = True) -> ScenarioInstance:
    """Feasible multi-hospital wave scenario for property and replay tests."""
    n_hospitals = int(rng.integers(2, 4))
    T = int(rng.integers(10, 17))
    pmf = (0.0, 0.5, 0.25, 0.25)
    los = LosDistribution(pmf=pmf)
    mean_los = sum(i * p for i, p in enumerate(pmf))
    hospitals = []
    units = []
    demand = {}
    peak = {}
    for i in range(n_hospitals):
        hid = f"H{i}"
        hospitals.append(Hospital(hid))
        lam = rng.uniform(1.0, 4.0)
        center = rng.uniform(T * 0.3, T * 0.7)
        width = rng.uniform(2.0, 5.0)
        wave = lam * np.exp(-0.5 * ((np.arange(T) - center) / width) ** 2)
        arrivals = rng.poisson(wave).astype(float)
        census_peak = float(np.convolve(arrivals, [1 - sum(pmf[: k + 1]) for k in range(T)])[:T].max())
        peak[hid] = max(census_peak, 1.0)
        if robust:
            median = np.maximum(0.0, arrivals + rng.normal(0, 0.4, T))
            spread = 0.8 + 0.3 * np.sqrt(np.maximum(median, 0.5))
            values = tuple(
                (max(0.0, m - 1.645 * s), m, m + 1.645 * s)
                for m, s in zip(median, spread)
            )
            demand[hid] = DemandInput(
                kind="arrivals_forecast",
                forecast=QuantileForecast(
                    hospital_id=hid, target="admissions",
                    issue_date=START - timedelta(days=1), horizon_days=T,
                    quantile_levels=(0.05, 0.5, 0.95), values=values,
                ),
                los=los,
            )
        else:
            demand[hid] = DemandInput(kind="arrivals_series", arrivals=tuple(arrivals), los=los)

    for i in range(n_hospitals):
        hid = f"H{i}"
        # capacity sized off the (possibly widened) peak so robust runs stay feasible
        required = peak[hid] * (1.9 if robust else 1.3) / 0.9 + 2.0
        baseline = max(2, int(round(required * rng.uniform(0.5, 0.8))))
        remaining = int(np.ceil(required)) - baseline
        rank = 1
        for size in _chunks(rng, baseline):
            units.append(CapacityUnit(f"{hid}-B{rank}", hid, size, "baseline", rank,
                                      conversion_cost=1.0))
            rank += 1
        lvl_cycle = ("level1", "level2", "level3", "max")
        li = 0
        for size in _chunks(rng, max(remaining, 2)):
            units.append(CapacityUnit(
                f"{hid}-S{rank}", hid, size, lvl_cycle[min(li, 3)], rank,
                setup_days=int(rng.integers(0, 2)), teardown_days=int(rng.integers(0, 2)),
                reserve_cost_per_day=float(li + 1), conversion_cost=2.0))
            rank += 1
            li += 1

    options = SolveOptions(
        allow_transfers=transfers,
        robust=robust,
        gamma1=float(rng.uniform(0.02, 0.15)) if robust else 0.0,
        gamma2=float(rng.uniform(1.0, 3.0)) if (robust and rng.random() < 0.5) else None,
        occupancy_fraction_cap=0.9,
        w1=1.0, w4=2.0,
        transfer_limits=TransferLimits(total=int(rng.integers(2, 10))) if transfers else TransferLimits(),
        seed=int(rng.integers(0, 10000)),
    )
    return ScenarioInstance(
        name="medium", start_date=START, horizon=T,
        hospitals=tuple(hospitals), units=tuple(units), demand=demand, options=options,
    )


def _chunks(rng: np.random.Generator, total: int) -> list[int]:
    out = []
    remaining = int(total)
    while remaining > 0:
        size = int(rng.integers(2, 9))
        if remaining - size < 2:
            size = remaining
        out.append(size)
        remaining -= size
    return out


def miscalibrated_forecasts(rng: np.random.Generator, n_issues: int = 60, horizon: int = 7,
                            hospitals: tuple[str, ...] = ("H1", "H2")):
    """Overconfident quantile forecasts plus matching actuals for conformal tests."""
    forecasts = []
    actuals = {}
    noise_sd = 3.0
    levels = (0.05, 0.25, 0.5, 0.75, 0.95)
    for hid in hospitals:
        base = rng.uniform(20, 40)
        for w in range(n_issues):
            issue = START + timedelta(days=7 * w)
            values = []
            for d in range(horizon):
                target_day = issue + timedelta(days=d + 1)
                truth_mean = base + 10 * np.sin(2 * np.pi * (7 * w + d) / 90.0)
                y = max(0.0, truth_mean + rng.normal(0, noise_sd))
                actuals[(hid, "census", target_day)] = y
                median = max(0.0, truth_mean + rng.normal(0, 0.5))
                narrow = 0.4 * noise_sd  # far too tight to cover
                values.append((
                    max(0.0, median - 1.645 * narrow), max(0.0, median - 0.674 * narrow),
                    median, median + 0.674 * narrow, median + 1.645 * narrow,
                ))
            forecasts.append(QuantileForecast(
                hospital_id=hid, target="census", issue_date=issue,
                horizon_days=horizon, quantile_levels=levels, values=tuple(values),
            ))
    return forecasts, actuals
