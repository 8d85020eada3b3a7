"""Mixed-integer model for joint dedicated-capacity allocation and patient transfers.

Variables per hospital h, day t, unit k:
  u[k,t]      unit usable as dedicated capacity (binary)
  uhat[k,t]   unit committed, including setup/teardown days (binary)
  ucheck[k,t] unit converted on day t (binary)
  c[h,t]      allocated capacity (continuous, equals sum of active unit beds)
  s[h,g,t]    incoming patients transferred from h to g on day t (integer)

The no-shortage constraint pins allocated capacity above the binding demand:
observed census, a worst-case census envelope, or the LOS-convolution census
expression in the transfer-aware modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from surgeplan import solver
from surgeplan.domain import ScenarioInstance, SolveOptions, level_index
from surgeplan.dynamics import census_from_flows, initial_census_decay
from surgeplan.uncertainty import (RobustArrivalsBound, build_band_from_forecast,
                                   compute_envelope)
from surgeplan.solver import BINARY, EQ, GE, INTEGER, LE, LinearModel, SolverResult


class MissingEnvelope(RuntimeError):
    pass


class MissingLos(RuntimeError):
    pass


class NoSolution(RuntimeError):
    def __init__(self, status: str, message: str = ""):
        super().__init__(message or f"solver reported {status}")
        self.status = status


@dataclass(frozen=True)
class RobustCensusBound:
    census_upper: tuple[float, ...]


RobustInput = Union[RobustCensusBound, RobustArrivalsBound]


def prepare_robust_inputs(scenario: ScenarioInstance, backend: Optional[str] = None) -> dict[str, RobustInput]:
    """Solve the per-hospital envelope LPs required by a robust build."""
    opts = scenario.options
    out: dict[str, RobustInput] = {}
    for hid in scenario.hospital_ids():
        d = scenario.demand[hid]
        if d.kind != "arrivals_forecast" or d.forecast is None:
            raise MissingEnvelope(f"hospital {hid}: robust mode needs a quantile forecast")
        band = build_band_from_forecast(d.forecast, opts.interval_level, opts.gamma1, opts.gamma2)
        if d.forecast.target == "census":
            env = compute_envelope(band, backend)
            out[hid] = RobustCensusBound(census_upper=env.upper)
        else:
            if d.los is None:
                raise MissingLos(f"hospital {hid}: admissions forecast needs a LOS distribution")
            env = compute_envelope(band, backend)
            out[hid] = RobustArrivalsBound(
                arrivals_upper=env.upper,
                arrivals_lower=env.lower,
                survival=d.los.survival_curve(scenario.horizon),
            )
    return out


@dataclass
class HospitalDemand:
    """Binding demand for one hospital: a constant series plus, in transfer modes,
    survival weights applied to net incoming transfers."""

    census: np.ndarray
    survival: Optional[np.ndarray] = None
    transfer_out_cap: Optional[np.ndarray] = None


def binding_demand(scenario: ScenarioInstance,
                   robust_inputs: Optional[Mapping[str, RobustInput]] = None) -> dict[str, HospitalDemand]:
    opts = scenario.options
    T = scenario.horizon
    out: dict[str, HospitalDemand] = {}
    for hid in scenario.hospital_ids():
        d = scenario.demand[hid]
        if opts.robust:
            if not robust_inputs or hid not in robust_inputs:
                raise MissingEnvelope(f"hospital {hid}: robust solve requires precomputed envelopes")
            ri = robust_inputs[hid]
            if isinstance(ri, RobustCensusBound):
                if opts.allow_transfers:
                    raise MissingLos(f"hospital {hid}: transfers require an arrivals-based bound")
                out[hid] = HospitalDemand(census=np.asarray(ri.census_upper))
            else:
                decay = None
                if d.los is not None and d.initial_census > 0:
                    decay = initial_census_decay(d.initial_census, d.los, T)
                base = ri.worst_case_census(initial_decay=decay)
                out[hid] = HospitalDemand(
                    census=base,
                    survival=np.asarray(ri.survival) if opts.allow_transfers else None,
                    transfer_out_cap=np.asarray(ri.arrivals_lower) if opts.allow_transfers else None,
                )
            continue
        if d.kind == "census_series":
            out[hid] = HospitalDemand(census=np.asarray(d.census, dtype=float))
            continue
        if d.kind == "arrivals_series":
            arrivals = np.asarray(d.arrivals, dtype=float)
        else:  # arrivals_forecast used deterministically: take the median
            if d.forecast.target == "census":
                out[hid] = HospitalDemand(census=np.asarray(d.forecast.median_series(), dtype=float))
                continue
            arrivals = np.asarray(d.forecast.median_series(), dtype=float)
        if d.los is None:
            raise MissingLos(f"hospital {hid}: arrivals-based demand requires a LOS distribution")
        decay = initial_census_decay(d.initial_census, d.los, T)
        census = census_from_flows(arrivals, d.los, decay)
        surv = np.array(d.los.survival_curve(T))
        out[hid] = HospitalDemand(
            census=census,
            survival=surv if opts.allow_transfers else None,
            transfer_out_cap=arrivals if opts.allow_transfers else None,
        )
    return out


@dataclass
class ModelHandle:
    scenario: ScenarioInstance
    model: LinearModel
    demand: dict[str, HospitalDemand]
    u: dict[tuple[str, int], int] = field(default_factory=dict)
    uhat: dict[tuple[str, int], int] = field(default_factory=dict)
    ucheck: dict[tuple[str, int], int] = field(default_factory=dict)
    c: dict[tuple[str, int], int] = field(default_factory=dict)
    s: dict[tuple[str, str, int], int] = field(default_factory=dict)
    net: dict[tuple[str, int], int] = field(default_factory=dict)
    objective_terms: dict[str, dict[int, float]] = field(default_factory=dict)
    objective_mode: str = "weighted"
    surge_level_lock: bool = False

    def constraint_counts(self) -> dict[str, int]:
        return self.model.tag_counts()


def _achievable_sums(units, enforce_order: bool, level_lock: bool) -> np.ndarray:
    """Sorted capacity values reachable by a feasible unit selection.

    Free selection: all subset sums. Priority order: prefix sums only.
    Level lock: cumulative surge-level sums.
    """
    if level_lock:
        by_level: dict[int, int] = {}
        for u in units:
            by_level[level_index(u.surge_level)] = by_level.get(level_index(u.surge_level), 0) + u.beds
        sums = [0]
        for lvl in sorted(by_level):
            sums.append(sums[-1] + by_level[lvl])
        return np.array(sorted(set(sums)), dtype=float)
    if enforce_order:
        sums = [0]
        for u in units:
            sums.append(sums[-1] + u.beds)
        return np.array(sums, dtype=float)
    total = sum(u.beds for u in units)
    reachable = np.zeros(total + 1, dtype=bool)
    reachable[0] = True
    for u in units:
        reachable[u.beds :] |= reachable[: total + 1 - u.beds]
    return np.nonzero(reachable)[0].astype(float)


def _round_up_achievable(sums: np.ndarray, value: float) -> float:
    """Smallest reachable capacity >= value (value itself if none: infeasible anyway)."""
    if value <= 0:
        return value
    pos = int(np.searchsorted(sums, value - 1e-9))
    if pos >= len(sums):
        return value
    return float(sums[pos])


def _transfer_lanes(scenario: ScenarioInstance) -> list[tuple[str, str]]:
    hids = scenario.hospital_ids()
    limits = scenario.options.transfer_limits
    return [(h, g) for h in hids for g in hids if h != g and limits.pair_limit(h, g) != 0]


def _twin_key(unit, opts: SolveOptions):
    return (unit.hospital, unit.beds, unit.surge_level, unit.setup_days, unit.teardown_days,
            unit.reserve_cost_per_day, unit.conversion_cost,
            bool(opts.initial_unit_state.get(unit.id, False)))


def build_model(
    scenario: ScenarioInstance,
    robust_inputs: Optional[Mapping[str, RobustInput]] = None,
    objective_mode: str = "weighted",
    surge_level_lock: bool = False,
) -> ModelHandle:
    """Translate a scenario into the full MILP.

    objective_mode selects what the solve minimizes:
      weighted        the cost objective (bed-day, reserve, conversion, transfer weights)
      bed_days        total dedicated bed-days (plus a tiny transfer tie-break)
      surge_bed_days  bed-days of above-baseline units only (plus the tie-break)
    """
    opts = scenario.options
    T = scenario.horizon
    demand = binding_demand(scenario, robust_inputs)
    m = LinearModel()
    if opts.allow_transfers:
        m.metadata["distrust_presolve"] = True
    handle = ModelHandle(scenario=scenario, model=m, demand=demand,
                         objective_mode=objective_mode, surge_level_lock=surge_level_lock)

    # under the surge objective baseline units are free and extra capacity can
    # only relax the demand rows, so pinning them on preserves the optimum
    pin_baseline = objective_mode == "surge_bed_days"

    for hid in scenario.hospital_ids():
        units = scenario.units_of(hid)
        cap_total = sum(u.beds for u in units)
        for t in range(T):
            handle.c[(hid, t)] = m.add_variable(f"c[{hid},{t}]", lb=0.0, ub=cap_total)
        for unit in units:
            preallocated = bool(opts.initial_unit_state.get(unit.id, False))
            u_lb = 1 if (pin_baseline and unit.surge_level == "baseline") else 0
            for t in range(T):
                handle.u[(unit.id, t)] = m.add_variable(f"u[{unit.id},{t}]", lb=u_lb, ub=1, kind=BINARY)
            for t in range(T):
                handle.uhat[(unit.id, t)] = m.add_variable(
                    f"uhat[{unit.id},{t}]", lb=0, ub=1, kind=BINARY, implied_integral=True)
            for t in range(T):
                if t == 0 and preallocated:
                    continue  # day-0 conversion is free for pre-allocated units
                handle.ucheck[(unit.id, t)] = m.add_variable(
                    f"ucheck[{unit.id},{t}]", lb=0, ub=1, kind=BINARY, implied_integral=True)

    lanes = _transfer_lanes(scenario) if opts.allow_transfers else []
    limits = opts.transfer_limits
    for h, g in lanes:
        for t in range(T):
            ub: float = math.inf
            for lim in (limits.pair_limit(h, g), limits.hospital_limit(h), limits.total):
                if lim is not None:
                    ub = min(ub, lim)
            cap = demand[h].transfer_out_cap
            if cap is not None:
                ub = min(ub, float(cap[t]))
            handle.s[(h, g, t)] = m.add_variable(f"s[{h},{g},{t}]", lb=0, ub=ub, kind=INTEGER)

    # net incoming transfers per (hospital, day), kept as explicit integer
    # variables so the census rows stay sparse
    if lanes:
        for hid in scenario.hospital_ids():
            for t in range(T):
                day_cap = sum(
                    m.variables[handle.s[(h, g, t)]].ub for (h, g) in lanes if h == hid or g == hid
                )
                handle.net[(hid, t)] = m.add_variable(
                    f"net[{hid},{t}]", lb=-day_cap, ub=day_cap, kind=INTEGER, implied_integral=True)
        for hid in scenario.hospital_ids():
            for t in range(T):
                row = {handle.net[(hid, t)]: 1.0}
                for (h, g) in lanes:
                    idx = handle.s[(h, g, t)]
                    if g == hid:
                        row[idx] = row.get(idx, 0.0) - 1.0
                    if h == hid:
                        row[idx] = row.get(idx, 0.0) + 1.0
                m.add_constraint("net_transfer_definition", row, EQ, 0.0)

    def census_expr(hid: str, t: int) -> dict[int, float]:
        """Transfer-dependent part of the census at (hid, t); empty in fixed modes."""
        coefs: dict[int, float] = {}
        surv = demand[hid].survival
        if surv is None or not lanes:
            return coefs
        for tp in range(t + 1):
            w = float(surv[t - tp])
            if w != 0.0:
                coefs[handle.net[(hid, tp)]] = -w
        return coefs

    for hid in scenario.hospital_ids():
        units = scenario.units_of(hid)
        for t in range(T):
            coefs = {handle.c[(hid, t)]: 1.0}
            for unit in units:
                coefs[handle.u[(unit.id, t)]] = -float(unit.beds)
            m.add_constraint("capacity_definition", coefs, EQ, 0.0)

        bound = demand[hid].census
        transfer_dependent = demand[hid].survival is not None and bool(lanes)
        sums = _achievable_sums(units, opts.enforce_unit_order, surge_level_lock)

        def tighten(value: float) -> float:
            # capacity only moves in unit-sized steps, so constant demand can be
            # rounded up to the nearest reachable capacity without changing optima
            if transfer_dependent:
                return value
            return _round_up_achievable(sums, value)

        for t in range(T):
            row = {handle.c[(hid, t)]: 1.0}
            row.update(census_expr(hid, t))
            m.add_constraint("no_shortage", row, GE, tighten(float(bound[t])))
        if opts.occupancy_fraction_cap is not None:
            z = opts.occupancy_fraction_cap
            for t in range(T):
                row = {handle.c[(hid, t)]: z}
                row.update(census_expr(hid, t))
                m.add_constraint("occupancy_fraction_cap", row, GE,
                                 z * tighten(float(bound[t]) / z))
        if opts.occupancy_headroom is not None:
            zp = opts.occupancy_headroom
            for t in range(T):
                row = {handle.c[(hid, t)]: 1.0}
                row.update(census_expr(hid, t))
                m.add_constraint("occupancy_headroom_cap", row, GE,
                                 tighten(float(bound[t]) + zp))

        for unit in units:
            preallocated = bool(opts.initial_unit_state.get(unit.id, False))
            for t in range(T):
                u_idx = handle.u[(unit.id, t)]
                for off in range(-unit.setup_days, unit.teardown_days + 1):
                    tp = t + off
                    if 0 <= tp < T:
                        m.add_constraint(
                            "allocation_window",
                            {u_idx: 1.0, handle.uhat[(unit.id, tp)]: -1.0}, LE, 0.0)
            for t in range(T):
                u_idx = handle.u[(unit.id, t)]
                if t == 0:
                    if not preallocated:
                        m.add_constraint(
                            "conversion_initial",
                            {handle.ucheck[(unit.id, 0)]: 1.0, u_idx: -1.0}, EQ, 0.0)
                else:
                    m.add_constraint(
                        "conversion_step",
                        {handle.ucheck[(unit.id, t)]: 1.0, u_idx: -1.0,
                         handle.u[(unit.id, t - 1)]: 1.0}, GE, 0.0)

        if opts.enforce_unit_order:
            for prev, unit in zip(units, units[1:]):
                for t in range(T):
                    m.add_constraint(
                        "unit_order",
                        {handle.u[(unit.id, t)]: 1.0, handle.u[(prev.id, t)]: -1.0}, LE, 0.0)
        elif not surge_level_lock:
            # interchangeable units admit a pointwise-sorted optimal solution
            # (merge any pair to its pointwise max/min), so order them outright
            for prev, unit in zip(units, units[1:]):
                if _twin_key(prev, opts) == _twin_key(unit, opts):
                    for t in range(T):
                        m.add_constraint(
                            "twin_symmetry",
                            {handle.u[(unit.id, t)]: 1.0, handle.u[(prev.id, t)]: -1.0}, LE, 0.0)

        if surge_level_lock:
            by_level: dict[int, list] = {}
            for unit in units:
                by_level.setdefault(level_index(unit.surge_level), []).append(unit)
            ordered_levels = sorted(by_level)
            for lvl in ordered_levels:
                first = by_level[lvl][0]
                for other in by_level[lvl][1:]:
                    for t in range(T):
                        m.add_constraint(
                            "surge_level_lock",
                            {handle.u[(other.id, t)]: 1.0, handle.u[(first.id, t)]: -1.0}, EQ, 0.0)
            for lo, hi in zip(ordered_levels, ordered_levels[1:]):
                for t in range(T):
                    m.add_constraint(
                        "surge_level_order",
                        {handle.u[(by_level[hi][0].id, t)]: 1.0,
                         handle.u[(by_level[lo][0].id, t)]: -1.0}, LE, 0.0)

    if lanes:
        for hid in scenario.hospital_ids():
            cap = demand[hid].transfer_out_cap
            if cap is None:
                raise MissingLos(f"hospital {hid}: transfers require arrivals-based demand")
            for t in range(T):
                row = {handle.s[(hid, g, t)]: 1.0 for (h2, g) in lanes if h2 == hid}
                if row:
                    m.add_constraint("transfer_arrival_cap", row, LE, float(cap[t]))
            hl = limits.hospital_limit(hid)
            if hl is not None:
                for t in range(T):
                    row = {handle.s[(hid, g, t)]: 1.0 for (h2, g) in lanes if h2 == hid}
                    if row:
                        m.add_constraint("transfer_hospital_limit", row, LE, float(hl))
        if limits.total is not None:
            m.add_constraint("transfer_global_limit",
                             {idx: 1.0 for idx in handle.s.values()}, LE, float(limits.total))

    _set_objective(handle, objective_mode)
    return handle


_TRANSFER_TIE_BREAK = 1e-4


def _set_objective(handle: ModelHandle, mode: str) -> None:
    scenario = handle.scenario
    opts = scenario.options
    m = handle.model
    terms: dict[str, dict[int, float]] = {}

    def add(term: str, idx: int, coef: float) -> None:
        if coef == 0.0:
            return
        terms.setdefault(term, {})[idx] = terms.get(term, {}).get(idx, 0.0) + coef

    if mode == "weighted":
        for (hid, t), idx in handle.c.items():
            add("bed_day", idx, opts.w1_at(hid, t))
        for unit in scenario.units:
            for t in range(scenario.horizon):
                add("reserve", handle.uhat[(unit.id, t)], unit.reserve_cost_per_day)
                key = (unit.id, t)
                if key in handle.ucheck:
                    add("conversion", handle.ucheck[key], unit.conversion_cost)
        for (h, g, t), idx in handle.s.items():
            add("transfer", idx, opts.w4_at(h, g))
    elif mode == "bed_days":
        for idx in handle.c.values():
            add("bed_day", idx, 1.0)
        for idx in handle.s.values():
            add("transfer_tiebreak", idx, _TRANSFER_TIE_BREAK)
    elif mode == "surge_bed_days":
        for unit in scenario.units:
            if unit.surge_level == "baseline":
                continue
            for t in range(scenario.horizon):
                add("surge_bed_day", handle.u[(unit.id, t)], float(unit.beds))
        for idx in handle.s.values():
            add("transfer_tiebreak", idx, _TRANSFER_TIE_BREAK)
    else:
        raise ValueError(f"unknown objective mode {mode!r}")

    handle.objective_terms = terms
    m.objective = {}
    for coefs in terms.values():
        for idx, coef in coefs.items():
            m.add_objective_term(idx, coef)


def expected_constraint_counts(scenario: ScenarioInstance, objective_mode: str = "weighted",
                               surge_level_lock: bool = False) -> dict[str, int]:
    """Closed-form constraint census for a build of this scenario."""
    opts = scenario.options
    T = scenario.horizon
    H = len(scenario.hospitals)
    counts = {
        "capacity_definition": H * T,
        "no_shortage": H * T,
    }
    window = 0
    for u in scenario.units:
        for off in range(-u.setup_days, u.teardown_days + 1):
            window += max(0, T - abs(off))
    counts["allocation_window"] = window
    pre = sum(1 for u in scenario.units if opts.initial_unit_state.get(u.id, False))
    counts["conversion_initial"] = len(scenario.units) - pre
    counts["conversion_step"] = len(scenario.units) * (T - 1)
    if opts.enforce_unit_order:
        counts["unit_order"] = sum((len(scenario.units_of(h)) - 1) * T for h in scenario.hospital_ids())
    elif not surge_level_lock:
        twins = 0
        for hid in scenario.hospital_ids():
            units = scenario.units_of(hid)
            twins += sum(1 for a, b in zip(units, units[1:]) if _twin_key(a, opts) == _twin_key(b, opts))
        if twins:
            counts["twin_symmetry"] = twins * T
    if opts.occupancy_fraction_cap is not None:
        counts["occupancy_fraction_cap"] = H * T
    if opts.occupancy_headroom is not None:
        counts["occupancy_headroom_cap"] = H * T
    if surge_level_lock:
        lock = order = 0
        for hid in scenario.hospital_ids():
            levels = {}
            for u in scenario.units_of(hid):
                levels.setdefault(u.surge_level, []).append(u)
            lock += sum(len(us) - 1 for us in levels.values()) * T
            order += (len(levels) - 1) * T
        counts["surge_level_lock"] = lock
        counts["surge_level_order"] = order
    if opts.allow_transfers:
        lanes = _transfer_lanes(scenario)
        if lanes:
            counts["net_transfer_definition"] = H * T
        origins = {h for h, _ in lanes}
        counts["transfer_arrival_cap"] = len(origins) * T
        limited = [h for h in origins if opts.transfer_limits.hospital_limit(h) is not None]
        if limited:
            counts["transfer_hospital_limit"] = len(limited) * T
        if opts.transfer_limits.total is not None:
            counts["transfer_global_limit"] = 1
    return {k: v for k, v in counts.items() if v}


@dataclass(frozen=True)
class SolutionPlan:
    """Solved schedule: unit allocations, capacity, transfers, objective breakdown."""

    status: str
    objective: float
    objective_breakdown: dict
    gap: Optional[float]
    runtime_seconds: float
    solver_backend: str
    seed: int
    objective_mode: str
    robust: bool
    allow_transfers: bool
    horizon: int
    hospitals: tuple[str, ...]
    allocations: dict[str, tuple[int, ...]]      # u  (usable)
    committed: dict[str, tuple[int, ...]]        # uhat (setup/teardown window)
    conversions: dict[str, tuple[int, ...]]      # ucheck (conversion events)
    capacity: dict[str, tuple[float, ...]]       # per hospital
    demand_bound: dict[str, tuple[float, ...]]   # binding worst-case demand per hospital
    transfers: tuple[dict, ...]                  # {from, to, day, count}
    metrics: dict


def _canonical_unit_series(scenario: ScenarioInstance, u_sched: Mapping[str, Sequence[int]]):
    """Recompute committed/conversion schedules as their minimal feasible values."""
    T = scenario.horizon
    committed = {}
    conversions = {}
    for unit in scenario.units:
        u = u_sched[unit.id]
        hat = [0] * T
        for t in range(T):
            if u[t]:
                for d in range(t - unit.setup_days, t + unit.teardown_days + 1):
                    if 0 <= d < T:
                        hat[d] = 1
        preallocated = bool(scenario.options.initial_unit_state.get(unit.id, False))
        check = [0] * T
        for t in range(T):
            prev = 1 if (t == 0 and preallocated) else (u[t - 1] if t > 0 else 0)
            if u[t] and not prev:
                check[t] = 1
        committed[unit.id] = tuple(hat)
        conversions[unit.id] = tuple(check)
    return committed, conversions


def extract_solution(handle: ModelHandle, result: SolverResult, seed: int = 0) -> SolutionPlan:
    """Turn a raw solver assignment into a SolutionPlan (canonical integral schedules)."""
    if not result.has_solution:
        raise NoSolution(result.status, result.message)
    scenario = handle.scenario
    opts = scenario.options
    T = scenario.horizon
    x = result.x

    u_sched = {}
    for unit in scenario.units:
        u_sched[unit.id] = tuple(int(round(x[handle.u[(unit.id, t)]])) for t in range(T))
    committed, conversions = _canonical_unit_series(scenario, u_sched)

    capacity = {}
    for hid in scenario.hospital_ids():
        units = scenario.units_of(hid)
        capacity[hid] = tuple(
            float(sum(unit.beds * u_sched[unit.id][t] for unit in units)) for t in range(T)
        )

    transfers = []
    for (h, g, t), idx in sorted(handle.s.items()):
        count = int(round(x[idx]))
        if count > 0:
            transfers.append({"from": h, "to": g, "day": t, "count": count})

    demand_bound = {}
    for hid in scenario.hospital_ids():
        dem = handle.demand[hid]
        series = dem.census.copy()
        if dem.survival is not None:
            net = np.zeros(T)
            for tr in transfers:
                if tr["to"] == hid:
                    net[tr["day"]] += tr["count"]
                if tr["from"] == hid:
                    net[tr["day"]] -= tr["count"]
            series = series + np.convolve(net, dem.survival)[:T]
        demand_bound[hid] = tuple(float(v) for v in series)

    canonical = {}
    for (uid, t), i in handle.u.items():
        canonical[i] = float(u_sched[uid][t])
    for (uid, t), i in handle.uhat.items():
        canonical[i] = float(committed[uid][t])
    for (uid, t), i in handle.ucheck.items():
        canonical[i] = float(conversions[uid][t])
    for (hid, t), i in handle.c.items():
        canonical[i] = capacity[hid][t]
    for key, i in handle.s.items():
        canonical[i] = float(round(x[i]))

    breakdown = {}
    objective = 0.0
    for term, coefs in handle.objective_terms.items():
        value = 0.0
        for idx, coef in coefs.items():
            value += coef * canonical.get(idx, float(x[idx]))
        breakdown[term] = value
        objective += value

    bed_days = sum(sum(cap) for cap in capacity.values())
    surge_bed_days = 0.0
    for unit in scenario.units:
        if unit.surge_level != "baseline":
            surge_bed_days += unit.beds * sum(u_sched[unit.id])
    per_hospital = {}
    for hid in scenario.hospital_ids():
        units = scenario.units_of(hid)
        per_hospital[hid] = {
            "bed_days": float(sum(capacity[hid])),
            "surge_bed_days": float(sum(
                unit.beds * sum(u_sched[unit.id]) for unit in units if unit.surge_level != "baseline")),
            "peak_capacity": float(max(capacity[hid])) if T else 0.0,
            "peak_demand": float(max(demand_bound[hid])) if T else 0.0,
        }
    metrics = {
        "bed_days": float(bed_days),
        "surge_bed_days": float(surge_bed_days),
        "transfers_used": int(sum(tr["count"] for tr in transfers)),
        "per_hospital": per_hospital,
    }

    return SolutionPlan(
        status=result.status,
        objective=float(objective),
        objective_breakdown=breakdown,
        gap=result.gap,
        runtime_seconds=result.runtime_seconds,
        solver_backend=result.backend,
        seed=seed,
        objective_mode=handle.objective_mode,
        robust=opts.robust,
        allow_transfers=opts.allow_transfers,
        horizon=T,
        hospitals=scenario.hospital_ids(),
        allocations=u_sched,
        committed=committed,
        conversions=conversions,
        capacity=capacity,
        demand_bound=demand_bound,
        transfers=tuple(transfers),
        metrics=metrics,
    )


def solve_scenario(
    scenario: ScenarioInstance,
    backend: Optional[str] = None,
    objective_mode: str = "weighted",
    surge_level_lock: bool = False,
) -> SolutionPlan:
    """Validate-free solve pipeline: envelopes (robust), build, solve, extract."""
    opts = scenario.options
    backend_name = solver.resolve_backend(backend or opts.solver_backend)
    robust_inputs = prepare_robust_inputs(scenario, backend_name) if opts.robust else None
    handle = build_model(scenario, robust_inputs, objective_mode=objective_mode,
                         surge_level_lock=surge_level_lock)
    result = solver.solve_mip(handle.model, backend_name, time_limit=opts.time_limit_seconds)
    if not result.has_solution:
        raise NoSolution(result.status, result.message)
    return extract_solution(handle, result, seed=opts.seed)
