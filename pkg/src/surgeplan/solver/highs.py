"""LP/MIP solving through scipy's HiGHS bindings."""

from __future__ import annotations

import time
import warnings
from typing import Optional

import numpy as np
from scipy import optimize, sparse

from surgeplan.solver.linear import BINARY, EQ, GE, INTEGER, LE, LinearModel, SolverResult


def _constraint_matrix(model: LinearModel):
    rows, cols, data = [], [], []
    lo = np.full(len(model.constraints), -np.inf)
    hi = np.full(len(model.constraints), np.inf)
    for r, con in enumerate(model.constraints):
        for j, coef in con.coefs.items():
            rows.append(r)
            cols.append(j)
            data.append(coef)
        if con.sense == LE:
            hi[r] = con.rhs
        elif con.sense == GE:
            lo[r] = con.rhs
        else:
            lo[r] = hi[r] = con.rhs
    A = sparse.csr_matrix((data, (rows, cols)), shape=(len(model.constraints), model.n_vars))
    return A, lo, hi


def solve_lp_highs(model: LinearModel) -> SolverResult:
    start = time.perf_counter()
    c = model.objective_vector()
    lb, ub = model.bounds_arrays()
    kwargs = {}
    if model.constraints:
        A, lo, hi = _constraint_matrix(model)
        ineq_rows = [i for i, con in enumerate(model.constraints) if con.sense != EQ]
        eq_rows = [i for i, con in enumerate(model.constraints) if con.sense == EQ]
        # linprog wants A_ub x <= b_ub: flip >= rows
        if ineq_rows:
            signs = np.array([1.0 if model.constraints[i].sense == LE else -1.0 for i in ineq_rows])
            A_ub = sparse.diags(signs) @ A[ineq_rows]
            b_ub = np.array([model.constraints[i].rhs for i in ineq_rows]) * signs
            kwargs["A_ub"], kwargs["b_ub"] = A_ub, b_ub
        if eq_rows:
            kwargs["A_eq"] = A[eq_rows]
            kwargs["b_eq"] = np.array([model.constraints[i].rhs for i in eq_rows])
    res = optimize.linprog(c, bounds=list(zip(lb, ub)), method="highs", **kwargs)
    runtime = time.perf_counter() - start
    if res.status == 2:
        return SolverResult(status="infeasible", backend="highs", runtime_seconds=runtime)
    if res.status == 3:
        return SolverResult(status="unbounded", backend="highs", runtime_seconds=runtime)
    if not res.success:
        return SolverResult(status="error", backend="highs", runtime_seconds=runtime, message=res.message)
    obj = model.objective_value(res.x)
    return SolverResult(status="optimal", x=np.asarray(res.x), objective=obj, bound=obj,
                        gap=0.0, runtime_seconds=runtime, backend="highs")


def solve_mip_highs(model: LinearModel, time_limit: Optional[float] = None,
                    gap_tol: float = 1e-6, abs_gap: Optional[float] = None) -> SolverResult:
    start = time.perf_counter()
    c = model.objective_vector()
    lb, ub = model.bounds_arrays()
    integrality = np.array([1 if v.kind in (BINARY, INTEGER) else 0 for v in model.variables])
    constraints = []
    if model.constraints:
        A, lo, hi = _constraint_matrix(model)
        constraints = [optimize.LinearConstraint(A, lo, hi)]
    # The bundled HiGHS presolve returns wrong optima (not just spurious
    # infeasibility) on the transfer-coupled models, so those are solved with
    # presolve disabled outright (the hint is set by the model builder).
    presolve = not model.metadata.get("distrust_presolve", False)
    options = {"mip_rel_gap": gap_tol, "presolve": presolve}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    if abs_gap is not None:
        # forwarded verbatim to HiGHS; scipy only warns about unknown keys
        options["mip_abs_gap"] = float(abs_gap)

    def run(opts):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return optimize.milp(
                c,
                constraints=constraints,
                integrality=integrality,
                bounds=optimize.Bounds(lb, ub),
                options=opts,
            )

    res = run(options)
    if presolve and (res.status == 2 or (res.x is not None and model.constraint_violation(res.x) > 1e-5)):
        # never trust a presolve infeasibility verdict or a violating incumbent
        # without a presolve-free confirmation run
        res = run({**options, "presolve": False})
    runtime = time.perf_counter() - start
    if res.status == 2:
        return SolverResult(status="infeasible", backend="highs", runtime_seconds=runtime)
    if res.status == 3:
        return SolverResult(status="unbounded", backend="highs", runtime_seconds=runtime)
    if res.x is None:
        status = "timeout" if res.status == 1 else "error"
        return SolverResult(status=status, backend="highs", runtime_seconds=runtime, message=res.message)
    x = np.asarray(res.x)
    obj = model.objective_value(x)
    bound = res.mip_dual_bound if res.mip_dual_bound is not None else obj
    gap = res.mip_gap if res.mip_gap is not None else 0.0
    status = "optimal" if res.status == 0 else ("timeout" if res.status == 1 else "feasible")
    return SolverResult(status=status, x=x, objective=obj, bound=bound, gap=gap,
                        node_count=int(res.mip_node_count or 0), runtime_seconds=runtime,
                        backend="highs")
