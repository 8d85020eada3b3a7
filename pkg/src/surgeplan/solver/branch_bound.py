"""Exact branch & bound over the built-in simplex (best-bound, most-fractional)."""

from __future__ import annotations

import copy
import heapq
import math
import time
from typing import Optional

import numpy as np

from surgeplan.solver.linear import LinearModel, SolverResult
from surgeplan.solver.simplex import solve_lp_simplex

_INT_TOL = 1e-6


def _lp_with_bounds(model: LinearModel, bounds: dict[int, tuple[float, float]]) -> LinearModel:
    clone = copy.copy(model)
    clone.variables = list(model.variables)
    for idx, (lb, ub) in bounds.items():
        v = copy.copy(clone.variables[idx])
        v.lb, v.ub = lb, ub
        clone.variables[idx] = v
    return clone


def _fractional(x: np.ndarray, indices: list[int]) -> Optional[int]:
    """Most-fractional branching: the index whose value is closest to half-integral."""
    best, best_score = None, _INT_TOL
    for i in indices:
        frac = x[i] - math.floor(x[i])
        score = min(frac, 1.0 - frac)
        if score > best_score + 1e-12:
            best, best_score = i, score
    return best


def _round_heuristic(model: LinearModel, x: np.ndarray, indices: list[int]) -> Optional[np.ndarray]:
    trial = x.copy()
    for i in indices:
        trial[i] = round(trial[i])
    for i in model.integer_indices(include_implied=True):
        trial[i] = round(trial[i])
    if model.constraint_violation(trial) <= 1e-7:
        return trial
    return None


def solve_mip_branch_bound(
    model: LinearModel,
    time_limit: Optional[float] = None,
    gap_tol: float = 1e-6,
) -> SolverResult:
    """Best-bound branch & bound; exact at desk scale.

    Integrality marked implied_integral is not branched on: those variables are
    integral at any optimum of interest and get repaired during plan extraction.
    """
    start = time.perf_counter()
    branch_indices = model.integer_indices(include_implied=False)

    root = solve_lp_simplex(model)
    if root.status == "infeasible":
        return SolverResult(status="infeasible", backend="builtin",
                            runtime_seconds=time.perf_counter() - start)
    if root.status == "unbounded":
        return SolverResult(status="unbounded", backend="builtin",
                            runtime_seconds=time.perf_counter() - start)

    incumbent_x: Optional[np.ndarray] = None
    incumbent_obj = math.inf
    rounded = _round_heuristic(model, root.x, branch_indices)
    if rounded is not None:
        incumbent_x, incumbent_obj = rounded, model.objective_value(rounded)

    counter = 0
    heap: list[tuple[float, int, dict]] = [(root.objective, counter, {})]
    nodes = 0
    timed_out = False

    while heap:
        if time_limit is not None and time.perf_counter() - start > time_limit:
            timed_out = True
            break
        parent_bound, _, bounds = heapq.heappop(heap)
        if parent_bound >= incumbent_obj - 1e-9:
            continue
        res = solve_lp_simplex(_lp_with_bounds(model, bounds)) if bounds else root
        nodes += 1
        if res.status != "optimal":
            continue
        if res.objective >= incumbent_obj - 1e-9:
            continue
        branch_var = _fractional(res.x, branch_indices)
        if branch_var is None:
            if res.objective < incumbent_obj - 1e-9:
                incumbent_x, incumbent_obj = res.x.copy(), res.objective
            continue
        val = res.x[branch_var]
        var = model.variables[branch_var]
        lo = bounds.get(branch_var, (var.lb, var.ub))
        down = dict(bounds)
        down[branch_var] = (lo[0], math.floor(val))
        up = dict(bounds)
        up[branch_var] = (math.ceil(val), lo[1])
        for child in (down, up):
            clb, cub = child[branch_var]
            if clb <= cub:
                counter += 1
                heapq.heappush(heap, (res.objective, counter, child))

    open_bound = min((entry[0] for entry in heap), default=math.inf)
    if incumbent_x is None:
        if timed_out:
            return SolverResult(status="timeout", bound=min(open_bound, incumbent_obj),
                                node_count=nodes, backend="builtin",
                                runtime_seconds=time.perf_counter() - start)
        return SolverResult(status="infeasible", node_count=nodes, backend="builtin",
                            runtime_seconds=time.perf_counter() - start)

    bound = min(open_bound, incumbent_obj)
    gap = abs(incumbent_obj - bound) / max(1.0, abs(incumbent_obj))
    status = "timeout" if timed_out else ("optimal" if gap <= gap_tol else "feasible")
    return SolverResult(status=status, x=incumbent_x, objective=incumbent_obj,
                        bound=bound, gap=gap, node_count=nodes, backend="builtin",
                        runtime_seconds=time.perf_counter() - start)
