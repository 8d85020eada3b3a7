"""Dense bounded-variable primal simplex (two-phase, Bland's-rule fallback)."""

from __future__ import annotations

import math
import time

import numpy as np

from surgeplan.solver.linear import GE, LE, LinearModel, SolverResult

_TOL = 1e-9
_DUAL_TOL = 1e-7
_PIV_TOL = 1e-10
_BLAND_AFTER = 2000
_MAX_ITERS = 50000


class SimplexError(RuntimeError):
    pass


class _Tableau:
    """Equality-form problem min c.x, A x = b, l <= x <= u with artificials appended."""

    def __init__(self, model: LinearModel):
        n = model.n_vars
        m = len(model.constraints)
        self.n_struct = n
        self.m = m
        ncols = n + m + m  # structural, slack, artificial
        A = np.zeros((m, ncols))
        b = np.zeros(m)
        lb = np.full(ncols, -math.inf)
        ub = np.full(ncols, math.inf)
        for j, v in enumerate(model.variables):
            lb[j], ub[j] = v.lb, v.ub
        for i, con in enumerate(model.constraints):
            for j, coef in con.coefs.items():
                A[i, j] = coef
            b[i] = con.rhs
            s = n + i
            if con.sense == LE:
                lb[s], ub[s] = 0.0, math.inf
            elif con.sense == GE:
                lb[s], ub[s] = -math.inf, 0.0
            else:
                lb[s], ub[s] = 0.0, 0.0
            A[i, s] = 1.0
        self.A, self.b, self.lb, self.ub = A, b, lb, ub
        self.art0 = n + m

    def initial_state(self):
        ncols = self.A.shape[1]
        status = np.zeros(ncols, dtype=np.int8)  # 0 at-lb, 1 at-ub, -1 basic
        values = np.zeros(ncols)
        for j in range(self.art0):
            if math.isfinite(self.lb[j]):
                status[j], values[j] = 0, self.lb[j]
            elif math.isfinite(self.ub[j]):
                status[j], values[j] = 1, self.ub[j]
            else:
                status[j], values[j] = 0, 0.0
        resid = self.b - self.A[:, : self.art0] @ values[: self.art0]
        basis = np.zeros(self.m, dtype=int)
        for i in range(self.m):
            j = self.art0 + i
            self.A[i, j] = 1.0 if resid[i] >= 0 else -1.0
            self.lb[j], self.ub[j] = 0.0, math.inf
            basis[i] = j
            status[j] = -1
            values[j] = abs(resid[i])
        return basis, status, values


def _solve_phase(tab: _Tableau, cost: np.ndarray, basis, status, values, iter_budget: int):
    """Primal simplex to optimality for one phase cost; mutates state in place.

    Returns the optimal phase objective, or None if unbounded.
    """
    A, b, lb, ub = tab.A, tab.b, tab.lb, tab.ub
    m = tab.m
    B_inv = None
    iters = 0
    while True:
        if iters >= iter_budget:
            raise SimplexError("iteration limit exceeded")
        bland = iters >= _BLAND_AFTER
        if B_inv is None or iters % 60 == 0:
            try:
                B_inv = np.linalg.inv(A[:, basis])
            except np.linalg.LinAlgError as exc:
                raise SimplexError("singular basis") from exc
        x_nb = np.where(status >= 0, values, 0.0)
        xb = B_inv @ (b - A @ x_nb)
        values[basis] = xb

        y = cost[basis] @ B_inv
        d = cost - y @ A
        viol = np.zeros_like(d)
        at_lb = status == 0
        at_ub = status == 1
        viol[at_lb] = np.minimum(d[at_lb], 0.0)
        viol[at_ub] = -np.maximum(d[at_ub], 0.0)
        candidates = np.nonzero(viol < -_DUAL_TOL)[0]
        if len(candidates) == 0:
            return float(cost @ values)
        j = int(candidates[0]) if bland else int(candidates[np.argmin(viol[candidates])])
        delta = 1.0 if status[j] == 0 else -1.0

        w = B_inv @ A[:, j]
        own_range = ub[j] - lb[j]
        best_t = own_range if math.isfinite(own_range) else math.inf
        leave_row = -1
        leave_to_ub = False
        rates = -delta * w
        for i in range(m):
            rate = rates[i]
            if rate > _PIV_TOL:
                ti = max(ub[basis[i]] - xb[i], 0.0) / rate
                to_ub = True
            elif rate < -_PIV_TOL:
                ti = max(xb[i] - lb[basis[i]], 0.0) / (-rate)
                to_ub = False
            else:
                continue
            take = False
            if ti < best_t - _TOL:
                take = True
            elif ti <= best_t + _TOL:
                if leave_row == -1 and ti <= best_t:
                    take = True
                elif leave_row != -1:
                    if bland:
                        take = basis[i] < basis[leave_row]
                    else:
                        take = abs(rates[i]) > abs(rates[leave_row])
            if take:
                best_t, leave_row, leave_to_ub = min(ti, best_t), i, to_ub
        if math.isinf(best_t):
            return None  # unbounded direction
        if leave_row == -1:
            # entering variable flips to its opposite bound; basis unchanged
            values[j] = ub[j] if status[j] == 0 else lb[j]
            status[j] = 1 - status[j]
        else:
            leav = basis[leave_row]
            entering_val = values[j] + delta * best_t
            values[leav] = ub[leav] if leave_to_ub else lb[leav]
            status[leav] = 1 if leave_to_ub else 0
            basis[leave_row] = j
            status[j] = -1
            values[j] = entering_val
            piv = w[leave_row]
            if abs(piv) < _PIV_TOL:
                raise SimplexError("numerically zero pivot")
            B_inv[leave_row, :] /= piv
            wcol = w.copy()
            wcol[leave_row] = 0.0
            B_inv -= np.outer(wcol, B_inv[leave_row, :])
        iters += 1


def _bounds_free_optimum(model: LinearModel) -> SolverResult:
    c = model.objective_vector()
    x = np.zeros(model.n_vars)
    for j, v in enumerate(model.variables):
        if c[j] > 0:
            if not math.isfinite(v.lb):
                return SolverResult(status="unbounded", backend="builtin")
            x[j] = v.lb
        elif c[j] < 0:
            if not math.isfinite(v.ub):
                return SolverResult(status="unbounded", backend="builtin")
            x[j] = v.ub
        else:
            x[j] = v.lb if math.isfinite(v.lb) else (v.ub if math.isfinite(v.ub) else 0.0)
    obj = model.objective_value(x)
    return SolverResult(status="optimal", x=x, objective=obj, bound=obj, gap=0.0, backend="builtin")


def solve_lp_simplex(model: LinearModel) -> SolverResult:
    """Solve the continuous relaxation of `model` exactly (integrality ignored)."""
    start = time.perf_counter()
    for v in model.variables:
        if v.lb > v.ub + _TOL:
            return SolverResult(status="infeasible", backend="builtin",
                                message=f"empty bound interval on {v.name}")
    if not model.constraints:
        res = _bounds_free_optimum(model)
        res.runtime_seconds = time.perf_counter() - start
        return res

    tab = _Tableau(model)
    basis, status, values = tab.initial_state()

    phase1_cost = np.zeros(tab.A.shape[1])
    phase1_cost[tab.art0 :] = 1.0
    obj1 = _solve_phase(tab, phase1_cost, basis, status, values, _MAX_ITERS)
    if obj1 is None:
        raise SimplexError("phase 1 unbounded (cannot happen)")
    if obj1 > 1e-7:
        return SolverResult(status="infeasible", backend="builtin",
                            runtime_seconds=time.perf_counter() - start)
    # pin artificials at zero and optimize the true cost
    tab.ub[tab.art0 :] = 0.0
    phase2_cost = np.zeros(tab.A.shape[1])
    phase2_cost[: model.n_vars] = model.objective_vector()
    obj2 = _solve_phase(tab, phase2_cost, basis, status, values, _MAX_ITERS)
    runtime = time.perf_counter() - start
    if obj2 is None:
        return SolverResult(status="unbounded", backend="builtin", runtime_seconds=runtime)
    x = values[: model.n_vars].copy()
    worst = model.constraint_violation(x)
    if worst > 1e-6:
        raise SimplexError(f"simplex returned infeasible point (violation {worst:.2e})")
    obj = model.objective_value(x)
    return SolverResult(status="optimal", x=x, objective=obj, bound=obj,
                        runtime_seconds=runtime, gap=0.0, backend="builtin")
