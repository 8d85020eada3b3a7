"""Solver backends: built-in simplex/branch&bound, HiGHS via scipy, external adapter."""

from __future__ import annotations

import os
from typing import Optional

from surgeplan.solver.branch_bound import solve_mip_branch_bound
from surgeplan.solver.external import BackendUnavailable, solve_external
from surgeplan.solver.highs import solve_lp_highs, solve_mip_highs
from surgeplan.solver.linear import (BINARY, CONTINUOUS, EQ, GE, INTEGER, LE,
                                     LinearModel, SolverResult)
from surgeplan.solver.oracle import OracleResult, TooLarge, oracle_enumerate
from surgeplan.solver.simplex import SimplexError, solve_lp_simplex

DEFAULT_BACKEND = "highs"
ENV_VAR = "SURGEPLAN_SOLVER"


def resolve_backend(preferred: Optional[str] = None) -> str:
    """builtin | highs | external:<command>; env SURGEPLAN_SOLVER overrides the default."""
    name = preferred or os.environ.get(ENV_VAR) or DEFAULT_BACKEND
    if name in ("builtin", "highs") or name.startswith("external:"):
        return name
    raise BackendUnavailable(f"unknown solver backend {name!r}")


def solve_lp(model: LinearModel, backend: Optional[str] = None) -> SolverResult:
    name = resolve_backend(backend)
    if name == "builtin":
        return solve_lp_simplex(model)
    if name == "highs":
        return solve_lp_highs(model)
    return solve_external(model, name.split(":", 1)[1])


def solve_mip(model: LinearModel, backend: Optional[str] = None,
              time_limit: Optional[float] = None, gap_tol: float = 1e-6,
              abs_gap: Optional[float] = None) -> SolverResult:
    name = resolve_backend(backend)
    if name == "builtin":
        # the built-in search is exact; abs_gap only matters for early stopping
        return solve_mip_branch_bound(model, time_limit=time_limit, gap_tol=gap_tol)
    if name == "highs":
        return solve_mip_highs(model, time_limit=time_limit, gap_tol=gap_tol, abs_gap=abs_gap)
    return solve_external(model, name.split(":", 1)[1], time_limit=time_limit)


__all__ = [
    "BINARY", "CONTINUOUS", "INTEGER", "LE", "GE", "EQ",
    "LinearModel", "SolverResult", "SimplexError", "BackendUnavailable",
    "OracleResult", "TooLarge", "oracle_enumerate",
    "solve_lp", "solve_mip", "resolve_backend",
    "solve_lp_simplex", "solve_mip_branch_bound", "solve_lp_highs", "solve_mip_highs",
    "solve_external", "DEFAULT_BACKEND", "ENV_VAR",
]
