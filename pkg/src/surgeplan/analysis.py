"""Experiment layer: strategy comparison, rule-based baseline, Pareto sweeps, plot data."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from surgeplan import solver
from surgeplan.domain import SURGE_LEVELS, ScenarioInstance, level_index
from surgeplan.model import (NoSolution, SolutionPlan, binding_demand, build_model,
                             extract_solution, prepare_robust_inputs)
from surgeplan.solver import LE


@dataclass(frozen=True)
class StrategyResult:
    strategy: str
    bed_days: Optional[float]  # None when the strategy solve failed
    surge_bed_days: Optional[float]
    objective: Optional[float]
    status: str
    plan: Optional[SolutionPlan] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class ParetoPoint:
    max_transfers: int
    surge_bed_days: Optional[float]  # None when the point's solve failed outright
    transfers_used: int
    objective: Optional[float]
    status: str


@dataclass(frozen=True)
class ParetoCurve:
    points: tuple[ParetoPoint, ...]
    zero_surge_transfers: Optional[int] = None
    plans: dict = field(default_factory=dict, compare=False)


def _requirement(demand: np.ndarray, z: Optional[float], zp: Optional[float]) -> np.ndarray:
    req = demand.copy()
    if z is not None:
        req = np.maximum(req, demand / z)
    if zp is not None:
        req = np.maximum(req, demand + zp)
    return req


def deterministic_census(scenario: ScenarioInstance, backend: Optional[str] = None) -> dict[str, np.ndarray]:
    """Binding per-hospital census with transfers disabled (robust envelopes honored)."""
    base = scenario.with_options(allow_transfers=False)
    robust_inputs = prepare_robust_inputs(base, backend) if base.options.robust else None
    return {hid: d.census for hid, d in binding_demand(base, robust_inputs).items()}


def required_capacity_series(scenario: ScenarioInstance, plan: SolutionPlan) -> dict:
    """Per-hospital allocated capacity with the binding demand and cap-binding days."""
    opts = scenario.options
    out = {}
    for hid in plan.hospitals:
        demand = np.asarray(plan.demand_bound[hid])
        req = _requirement(demand, opts.occupancy_fraction_cap, opts.occupancy_headroom)
        out[hid] = {
            "capacity": list(plan.capacity[hid]),
            "demand": [float(v) for v in demand],
            "required": [float(v) for v in req],
            "cap_binding_days": [int(t) for t in np.nonzero(req > demand + 1e-9)[0]],
        }
    return out


def surge_timeline(scenario: ScenarioInstance, plan: SolutionPlan) -> dict[str, list[str]]:
    """Per-hospital maximum active surge level per day (baseline when none higher)."""
    timeline = {}
    for hid in plan.hospitals:
        units = scenario.units_of(hid)
        levels = []
        for t in range(plan.horizon):
            active = [level_index(u.surge_level) for u in units if plan.allocations[u.id][t]]
            levels.append(SURGE_LEVELS[max(active)] if active else "baseline")
        timeline[hid] = levels
    return timeline


@dataclass(frozen=True)
class RulePolicyResult:
    level_series: tuple[int, ...]
    capacity_series: tuple[float, ...]
    bed_days: float
    surge_bed_days: float
    shortage_days: tuple[int, ...]
    shortage_at_max: bool


def rule_based_surge_policy(
    census: Sequence[float],
    level_capacities: Sequence[float],
    up: float = 0.90,
    down: float = 0.70,
    lag_days: int = 1,
    level_setup_days: Optional[Sequence[int]] = None,
    guard_reescalation: bool = True,
) -> RulePolicyResult:
    """Threshold simulation: step the surge level up when occupancy exceeds `up`,
    back down when it falls below `down`, with changes taking effect after the lag
    (plus optional per-level setup days when escalating).

    level_capacities are cumulative allocated beds per level, strictly increasing;
    index 0 is the baseline level. Occupancy is measured against the current
    level's capacity. With guard_reescalation a down-step is skipped whenever the
    lower level would immediately re-trigger the up rule (prevents day-to-day
    level oscillation whenever the census sits between the two thresholds).
    """
    caps = list(level_capacities)
    if any(b <= a for a, b in zip(caps, caps[1:])):
        raise ValueError("cumulative level capacities must be strictly increasing")
    T = len(census)
    level = 0
    pending: Optional[tuple[int, int]] = None  # (day effective, target level)
    levels = []
    for t in range(T):
        if pending is not None and t >= pending[0]:
            level = pending[1]
            pending = None
        levels.append(level)
        occupancy = census[t] / caps[level]
        if pending is None:
            if occupancy > up and level < len(caps) - 1:
                delay = lag_days
                if level_setup_days is not None:
                    delay += level_setup_days[level + 1]
                pending = (t + delay, level + 1)
            elif occupancy < down and level > 0:
                if not (guard_reescalation and census[t] > up * caps[level - 1]):
                    pending = (t + lag_days, level - 1)
    capacity = tuple(float(caps[lv]) for lv in levels)
    shortage = tuple(int(t) for t in range(T) if census[t] > capacity[t] + 1e-9)
    at_max = any(census[t] > caps[-1] + 1e-9 for t in range(T))
    return RulePolicyResult(
        level_series=tuple(levels),
        capacity_series=capacity,
        bed_days=float(sum(capacity)),
        surge_bed_days=float(sum(max(0.0, c - caps[0]) for c in capacity)),
        shortage_days=shortage,
        shortage_at_max=at_max,
    )


def _solve_strategy(scenario: ScenarioInstance, backend: Optional[str],
                    objective_mode: str = "bed_days", surge_level_lock: bool = False,
                    time_limit: Optional[float] = None) -> SolutionPlan:
    robust_inputs = prepare_robust_inputs(scenario, backend) if scenario.options.robust else None
    handle = build_model(scenario, robust_inputs, objective_mode=objective_mode,
                         surge_level_lock=surge_level_lock)
    result = solver.solve_mip(handle.model, backend, time_limit=time_limit, abs_gap=0.5)
    if not result.has_solution:
        raise NoSolution(result.status, result.message)
    return extract_solution(handle, result, seed=scenario.options.seed)


def _cumulative_level_capacities(scenario: ScenarioInstance, hid: str) -> list[float]:
    by_level = {}
    for u in scenario.units_of(hid):
        by_level[level_index(u.surge_level)] = by_level.get(level_index(u.surge_level), 0) + u.beds
    caps = []
    running = 0.0
    for lvl in range(len(SURGE_LEVELS)):
        if lvl in by_level:
            running += by_level[lvl]
            caps.append(running)
    return caps


STRATEGIES = ("bed_level_min", "unit_level_optimal", "unit_level_practical",
              "unit_level_practical_transfers", "surge_level_optimal", "surge_level_rule")


def compare_strategies(scenario: ScenarioInstance, backend: Optional[str] = None,
                       time_limit: Optional[float] = None) -> list[StrategyResult]:
    """Required capacity (in bed-days) under each allocation strategy.

    Every optimization strategy minimizes total dedicated bed-days against the
    same binding demand, so the feasible-set nesting
    bed_level <= unit_optimal <= unit_practical <= surge_optimal holds exactly.
    """
    opts = scenario.options
    census = deterministic_census(scenario, backend)
    results: list[StrategyResult] = []

    bed_days = 0.0
    surge_days = 0.0
    for hid in scenario.hospital_ids():
        req = _requirement(census[hid], opts.occupancy_fraction_cap, opts.occupancy_headroom)
        beds = np.ceil(req - 1e-9)
        baseline = scenario.baseline_capacity(hid)
        bed_days += float(beds.sum())
        surge_days += float(np.maximum(0.0, beds - baseline).sum())
    results.append(StrategyResult("bed_level_min", bed_days, surge_days, bed_days, "optimal"))

    def run(name: str, sc: ScenarioInstance, lock: bool = False):
        try:
            plan = _solve_strategy(sc, backend, surge_level_lock=lock, time_limit=time_limit)
            results.append(StrategyResult(
                name, plan.metrics["bed_days"], plan.metrics["surge_bed_days"],
                plan.objective, plan.status, plan=plan))
        except NoSolution as exc:
            results.append(StrategyResult(name, None, None, None, exc.status, error=str(exc)))

    no_transfers = scenario.with_options(allow_transfers=False)
    run("unit_level_optimal", no_transfers.with_options(enforce_unit_order=False))
    run("unit_level_practical", no_transfers.with_options(enforce_unit_order=True))
    transfer_ready = all(
        scenario.demand[h].kind != "census_series"
        and not (scenario.demand[h].kind == "arrivals_forecast"
                 and scenario.demand[h].forecast is not None
                 and scenario.demand[h].forecast.target == "census")
        for h in scenario.hospital_ids()
    )
    if transfer_ready and len(scenario.hospitals) > 1:
        run("unit_level_practical_transfers",
            scenario.with_options(allow_transfers=True, enforce_unit_order=True))
    else:
        results.append(StrategyResult("unit_level_practical_transfers", None, None,
                                      None, "skipped", error="demand is not arrivals-based"))
    run("surge_level_optimal", no_transfers.with_options(enforce_unit_order=False), lock=True)

    rule_bed_days = 0.0
    rule_surge_days = 0.0
    rule_feasible = True
    for hid in scenario.hospital_ids():
        caps = _cumulative_level_capacities(scenario, hid)
        rule = rule_based_surge_policy(census[hid], caps)
        rule_bed_days += rule.bed_days
        rule_surge_days += rule.surge_bed_days
        if rule.shortage_days:
            rule_feasible = False
    results.append(StrategyResult(
        "surge_level_rule", rule_bed_days, rule_surge_days, rule_bed_days,
        "simulated" if rule_feasible else "simulated_with_shortage"))
    return results


def pareto_sweep(
    scenario: ScenarioInstance,
    s_values: Sequence[int],
    backend: Optional[str] = None,
    point_time_limit: Optional[float] = 90.0,
    stop_at_zero: bool = True,
) -> ParetoCurve:
    """One surge-minimizing solve per global transfer budget S.

    Each point's objective is constrained by the previous optimum (valid by
    feasible-set nesting), which both guarantees a nonincreasing curve and
    prunes the search. A point whose solve fails inherits the previous plan,
    which stays feasible under the larger budget.
    """
    if not scenario.options.allow_transfers:
        scenario = scenario.with_options(allow_transfers=True)
    robust_inputs = prepare_robust_inputs(scenario, backend) if scenario.options.robust else None
    points: list[ParetoPoint] = []
    plans: dict[int, SolutionPlan] = {}
    prev_plan: Optional[SolutionPlan] = None
    prev_obj: Optional[float] = None
    zero_at: Optional[int] = None
    for S in sorted(s_values):
        limits = replace(scenario.options.transfer_limits, total=int(S))
        sc = scenario.with_options(transfer_limits=limits)
        handle = build_model(sc, robust_inputs, objective_mode="surge_bed_days")
        if prev_obj is not None:
            handle.model.add_constraint("objective_bound", dict(handle.model.objective),
                                        LE, prev_obj + 1e-9)
        result = solver.solve_mip(handle.model, backend, time_limit=point_time_limit, abs_gap=0.5)
        if result.has_solution:
            plan = extract_solution(handle, result, seed=sc.options.seed)
            status = result.status
        elif prev_plan is not None and result.status in ("timeout", "error"):
            plan, status = prev_plan, "carried_forward"
        else:
            points.append(ParetoPoint(int(S), None, 0, None, result.status))
            continue
        points.append(ParetoPoint(
            int(S), plan.metrics["surge_bed_days"], plan.metrics["transfers_used"],
            plan.objective, status))
        plans[int(S)] = plan
        prev_plan, prev_obj = plan, plan.objective
        if zero_at is None and plan.metrics["surge_bed_days"] <= 1e-9:
            zero_at = int(S)
            if stop_at_zero:
                break
    return ParetoCurve(points=tuple(points), zero_surge_transfers=zero_at, plans=plans)


# ---------------------------------------------------------------------------
# plot-ready payloads (JSON-able dicts plus CSV renderings)

def occupancy_payload(scenario: ScenarioInstance, backend: Optional[str] = None) -> dict:
    """Census relative to baseline capacity per hospital and system-wide."""
    census = deterministic_census(scenario, backend)
    days = list(range(scenario.horizon))
    series = {}
    system_census = np.zeros(scenario.horizon)
    system_baseline = 0.0
    for hid in scenario.hospital_ids():
        baseline = scenario.baseline_capacity(hid)
        system_census += census[hid]
        system_baseline += baseline
        series[hid] = [float(v / baseline) if baseline else 0.0 for v in census[hid]]
    series["system"] = [float(v / system_baseline) if system_baseline else 0.0 for v in system_census]
    return {"chart": "occupancy_vs_baseline", "days": days, "series": series, "reference_line": 1.0}


def required_capacity_payload(scenario: ScenarioInstance, plan: SolutionPlan) -> dict:
    return {"chart": "required_capacity", "days": list(range(plan.horizon)),
            "hospitals": required_capacity_series(scenario, plan)}


def gantt_payload(scenario: ScenarioInstance, plan: SolutionPlan) -> dict:
    rows = []
    for hid in plan.hospitals:
        for unit in scenario.units_of(hid):
            sched = plan.allocations[unit.id]
            spans = []
            start = None
            for t, on in enumerate(sched):
                if on and start is None:
                    start = t
                elif not on and start is not None:
                    spans.append([start, t])
                    start = None
            if start is not None:
                spans.append([start, plan.horizon])
            rows.append({
                "unit": unit.id, "hospital": hid, "beds": unit.beds,
                "surge_level": unit.surge_level, "priority_rank": unit.priority_rank,
                "active_spans": spans,
            })
    return {"chart": "unit_allocation_gantt", "horizon": plan.horizon, "rows": rows}


def strategy_payload(results: Sequence[StrategyResult]) -> dict:
    return {
        "chart": "strategy_comparison",
        "strategies": [
            {"strategy": r.strategy, "bed_days": r.bed_days, "surge_bed_days": r.surge_bed_days,
             "objective": r.objective, "status": r.status, "error": r.error}
            for r in results
        ],
    }


def pareto_payload(curve: ParetoCurve) -> dict:
    return {
        "chart": "transfer_pareto",
        "points": [
            {"max_transfers": p.max_transfers, "surge_bed_days": p.surge_bed_days,
             "transfers_used": p.transfers_used, "objective": p.objective, "status": p.status}
            for p in curve.points
        ],
        "zero_surge_transfers": curve.zero_surge_transfers,
    }


def surge_timeline_payload(scenario: ScenarioInstance, plan: SolutionPlan) -> dict:
    return {"chart": "surge_timeline", "days": list(range(plan.horizon)),
            "hospitals": surge_timeline(scenario, plan)}


def payload_to_csv(payload: dict) -> str:
    """Flat CSV rendering of any chart payload (one row per series point)."""
    chart = payload.get("chart", "")
    lines = []
    if chart == "occupancy_vs_baseline":
        lines.append("series,day,occupancy_ratio")
        for name, values in sorted(payload["series"].items()):
            for day, v in zip(payload["days"], values):
                lines.append(f"{name},{day},{v}")
    elif chart == "required_capacity":
        lines.append("hospital,day,capacity,demand,required")
        for hid, data in sorted(payload["hospitals"].items()):
            for day in payload["days"]:
                lines.append(f"{hid},{day},{data['capacity'][day]},{data['demand'][day]},{data['required'][day]}")
    elif chart == "unit_allocation_gantt":
        lines.append("unit,hospital,beds,surge_level,start,end")
        for row in payload["rows"]:
            if not row["active_spans"]:
                continue
            for start, end in row["active_spans"]:
                lines.append(f"{row['unit']},{row['hospital']},{row['beds']},{row['surge_level']},{start},{end}")
    elif chart == "strategy_comparison":
        lines.append("strategy,bed_days,surge_bed_days,objective,status")
        for rec in payload["strategies"]:
            lines.append(f"{rec['strategy']},{rec['bed_days']},{rec['surge_bed_days']},{rec['objective']},{rec['status']}")
    elif chart == "transfer_pareto":
        lines.append("max_transfers,surge_bed_days,transfers_used,status")
        for p in payload["points"]:
            lines.append(f"{p['max_transfers']},{p['surge_bed_days']},{p['transfers_used']},{p['status']}")
    elif chart == "surge_timeline":
        lines.append("hospital,day,level")
        for hid, levels in sorted(payload["hospitals"].items()):
            for day, lvl in zip(payload["days"], levels):
                lines.append(f"{hid},{day},{lvl}")
    else:
        raise ValueError(f"unknown chart payload {chart!r}")
    return "\n".join(lines) + "\n"


def plan_plot_payloads(scenario: ScenarioInstance, plan: SolutionPlan) -> dict[str, dict]:
    return {
        "occupancy": occupancy_payload(scenario),
        "required_capacity": required_capacity_payload(scenario, plan),
        "gantt": gantt_payload(scenario, plan),
        "surge_timeline": surge_timeline_payload(scenario, plan),
    }
