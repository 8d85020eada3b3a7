"""Brute-force enumeration oracle for tiny scenarios.

Independent of the MILP formulation and backends: it enumerates every unit
on/off schedule and integer transfer vector, evaluating feasibility and cost
by direct formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from surgeplan.domain import CapacityUnit, ScenarioInstance


class TooLarge(ValueError):
    pass


_MAX_JOINT_SCHEDULES = 2 ** 18
_MAX_TRANSFER_VECTORS = 200_000


@dataclass
class OracleResult:
    status: str  # optimal | infeasible
    objective: Optional[float] = None
    unit_schedules: Optional[dict[str, tuple[int, ...]]] = None
    transfers: Optional[dict[tuple[str, str, int], int]] = None


def _unit_cost_table(unit: CapacityUnit, T: int, preallocated: bool) -> tuple[np.ndarray, np.ndarray]:
    """All 2^T schedules for one unit with their reserve+conversion cost."""
    n = 2 ** T
    sched = np.zeros((n, T), dtype=np.int8)
    cost = np.zeros(n)
    for m in range(n):
        u = [(m >> t) & 1 for t in range(T)]
        sched[m] = u
        committed = set()
        conversions = 0
        for t in range(T):
            if u[t]:
                for d in range(t - unit.setup_days, t + unit.teardown_days + 1):
                    if 0 <= d < T:
                        committed.add(d)
                prev = 1 if (t == 0 and preallocated) else (u[t - 1] if t > 0 else 0)
                if not prev:
                    conversions += 1
        cost[m] = unit.reserve_cost_per_day * len(committed) + unit.conversion_cost * conversions
    return sched, cost


def _hospital_tables(scenario: ScenarioInstance, hid: str):
    """Joint schedule table for one hospital: capacity series, fixed cost, validity."""
    T = scenario.horizon
    units = scenario.units_of(hid)
    opts = scenario.options
    scheds, ucosts = [], []
    for u in units:
        s, c = _unit_cost_table(u, T, bool(opts.initial_unit_state.get(u.id, False)))
        scheds.append(s)
        ucosts.append(c)
    k = len(units)
    n = 2 ** T
    if n ** k > _MAX_JOINT_SCHEDULES:
        raise TooLarge(f"hospital {hid}: {n ** k} joint schedules exceeds oracle bound")

    grids = np.meshgrid(*([np.arange(n)] * k), indexing="ij")
    flat = [g.reshape(-1) for g in grids]
    caps = np.zeros((n ** k, T))
    cost = np.zeros(n ** k)
    for d, u in enumerate(units):
        caps += scheds[d][flat[d]].astype(float) * u.beds
        cost += ucosts[d][flat[d]]
    valid = np.ones(n ** k, dtype=bool)
    if opts.enforce_unit_order:
        for d in range(1, k):
            # lower-priority unit (later rank) may only run where its predecessor does
            pair_ok = (scheds[d][:, None, :] <= scheds[d - 1][None, :, :]).all(axis=2)
            valid &= pair_ok[flat[d], flat[d - 1]]
    w1 = np.array([opts.w1_at(hid, t) for t in range(T)])
    cost = cost + caps @ w1
    return units, caps, cost, valid


def _required_series(demand: np.ndarray, z: Optional[float], zp: Optional[float]) -> np.ndarray:
    req = demand.copy()
    if z is not None:
        req = np.maximum(req, demand / z)
    if zp is not None:
        req = np.maximum(req, demand + zp)
    return req


def _direct_census(arrivals: np.ndarray, pmf: tuple[float, ...], initial_census: float) -> np.ndarray:
    T = len(arrivals)
    surv = [max(0.0, 1.0 - sum(pmf[: tau + 1])) for tau in range(T + 1)]
    o = np.zeros(T)
    for t in range(T):
        o[t] = sum(arrivals[tp] * surv[t - tp] for tp in range(t + 1))
    if initial_census > 0:
        o[0] += initial_census
        if surv[0] > 0:
            for t in range(1, T):
                o[t] += initial_census * surv[t] / surv[0]
    return o


def _transfer_vectors(scenario: ScenarioInstance, lanes: list[tuple[str, str]], arrivals: dict[str, np.ndarray]):
    """Yield every admissible transfer assignment {(h, g, t): count}."""
    T = scenario.horizon
    opts = scenario.options
    limits = opts.transfer_limits
    slots = [(h, g, t) for (h, g) in lanes for t in range(T)]
    global_cap = limits.total if limits.total is not None else sum(
        int(arrivals[h][t]) for h, _, t in slots
    )

    count = 0

    def rec(i: int, remaining: int, by_ht: dict, assignment: dict):
        nonlocal count
        if i == len(slots):
            count += 1
            if count > _MAX_TRANSFER_VECTORS:
                raise TooLarge("transfer enumeration exceeds oracle bound")
            yield dict(assignment)
            return
        h, g, t = slots[i]
        cap = remaining
        pl = limits.pair_limit(h, g)
        if pl is not None:
            cap = min(cap, pl)
        hl = limits.hospital_limit(h)
        used_ht = by_ht.get((h, t), 0)
        if hl is not None:
            cap = min(cap, hl - used_ht)
        cap = min(cap, int(math.floor(arrivals[h][t] + 1e-9)) - used_ht)
        for v in range(max(cap, 0) + 1):
            if v:
                assignment[(h, g, t)] = v
                by_ht[(h, t)] = used_ht + v
            yield from rec(i + 1, remaining - v, by_ht, assignment)
            if v:
                del assignment[(h, g, t)]
                by_ht[(h, t)] = used_ht
        return

    yield from rec(0, global_cap, {}, {})


def oracle_enumerate(scenario: ScenarioInstance) -> OracleResult:
    """Exhaustive optimum for tiny instances (<=2 hospitals, T<=6, <=3 units each)."""
    T = scenario.horizon
    hids = scenario.hospital_ids()
    if len(hids) > 2 or T > 6:
        raise TooLarge("oracle handles at most 2 hospitals and 6 days")
    if any(len(scenario.units_of(h)) > 3 for h in hids):
        raise TooLarge("oracle handles at most 3 units per hospital")
    opts = scenario.options
    if opts.robust:
        raise TooLarge("oracle only evaluates deterministic instances")

    tables = {h: _hospital_tables(scenario, h) for h in hids}
    z, zp = opts.occupancy_fraction_cap, opts.occupancy_headroom

    def best_for(hid: str, demand: np.ndarray):
        units, caps, cost, valid = tables[hid]
        req = _required_series(demand, z, zp)
        feasible = valid & (caps >= req[None, :] - 1e-9).all(axis=1)
        if not feasible.any():
            return None, None
        idx = np.nonzero(feasible)[0]
        local = idx[np.argmin(cost[idx])]
        return float(cost[local]), int(local)

    def demand_of(hid: str, net_in: np.ndarray, net_out: np.ndarray) -> np.ndarray:
        d = scenario.demand[hid]
        if d.kind == "census_series":
            return np.asarray(d.census, dtype=float)
        arrivals = np.asarray(d.arrivals, dtype=float) + net_in - net_out
        return _direct_census(arrivals, d.los.pmf, d.initial_census)

    zero = np.zeros(T)
    if not opts.allow_transfers or len(hids) < 2:
        total = 0.0
        schedules = {}
        for h in hids:
            c, idx = best_for(h, demand_of(h, zero, zero))
            if c is None:
                return OracleResult(status="infeasible")
            total += c
            schedules[h] = idx
        return OracleResult(status="optimal", objective=total,
                            unit_schedules=_decode_schedules(scenario, tables, schedules),
                            transfers={})

    lanes = []
    for h in hids:
        for g in hids:
            if h != g and scenario.options.transfer_limits.pair_limit(h, g) != 0:
                lanes.append((h, g))
    arrivals = {h: np.asarray(scenario.demand[h].arrivals, dtype=float) for h in hids}

    best = None
    for assignment in _transfer_vectors(scenario, lanes, arrivals):
        t_cost = sum(opts.w4_at(h, g) * v for (h, g, t), v in assignment.items())
        total = t_cost
        schedules = {}
        ok = True
        for h in hids:
            net_in = np.zeros(T)
            net_out = np.zeros(T)
            for (src, dst, t), v in assignment.items():
                if dst == h:
                    net_in[t] += v
                if src == h:
                    net_out[t] += v
            c, idx = best_for(h, demand_of(h, net_in, net_out))
            if c is None:
                ok = False
                break
            total += c
            schedules[h] = idx
        if ok and (best is None or total < best[0] - 1e-12):
            best = (total, schedules, dict(assignment))
    if best is None:
        return OracleResult(status="infeasible")
    return OracleResult(status="optimal", objective=best[0],
                        unit_schedules=_decode_schedules(scenario, tables, best[1]),
                        transfers=best[2])


def _decode_schedules(scenario, tables, joint_indices: dict[str, int]) -> dict[str, tuple[int, ...]]:
    T = scenario.horizon
    out = {}
    for hid, joint in joint_indices.items():
        units = tables[hid][0]
        n = 2 ** T
        rem = joint
        codes = []
        for _ in units:
            codes.append(rem % n)
            rem //= n
        codes.reverse()
        for unit, code in zip(units, codes):
            out[unit.id] = tuple((code >> t) & 1 for t in range(T))
    return out
