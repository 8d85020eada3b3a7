"""External-solver adapter: spawn a command, exchange LP model and solution text.

Protocol: the configured command is invoked as `<command> <model.lp> <out.sol>`.
The solution file carries one status word on the first line (optimal, feasible,
infeasible, unbounded, timeout, error), the objective on the second, then one
`<variable-name> <value>` pair per line. The objective is recomputed locally
from the returned assignment rather than trusted.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
import time
from pathlib import Path
from typing import Optional

import numpy as np

from surgeplan.solver.linear import LinearModel, SolverResult
from surgeplan.solver.lp_format import _safe_name, write_lp


class BackendUnavailable(RuntimeError):
    pass


def parse_solution_text(text: str) -> tuple[str, Optional[float], dict[str, float]]:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty solution file")
    status = lines[0].lower()
    objective = None
    assignment: dict[str, float] = {}
    rest = lines[1:]
    if rest:
        try:
            objective = float(rest[0])
            rest = rest[1:]
        except ValueError:
            pass
    for ln in rest:
        name, _, value = ln.partition(" ")
        assignment[name] = float(value)
    return status, objective, assignment


def solve_external(model: LinearModel, command: str,
                   time_limit: Optional[float] = None) -> SolverResult:
    start = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="surgeplan-ext-") as tmp:
        model_path = Path(tmp) / "model.lp"
        sol_path = Path(tmp) / "out.sol"
        model_path.write_text(write_lp(model))
        argv = shlex.split(command) + [str(model_path), str(sol_path)]
        try:
            proc = subprocess.run(
                argv,
                capture_output=True,
                text=True,
                timeout=None if time_limit is None else time_limit + 30,
            )
        except FileNotFoundError as exc:
            raise BackendUnavailable(f"external solver command not found: {command!r}") from exc
        except subprocess.TimeoutExpired:
            return SolverResult(status="timeout", backend=f"external:{command}",
                                runtime_seconds=time.perf_counter() - start)
        if proc.returncode != 0 or not sol_path.exists():
            return SolverResult(status="error", backend=f"external:{command}",
                                message=proc.stderr.strip()[:500],
                                runtime_seconds=time.perf_counter() - start)
        status, _, assignment = parse_solution_text(sol_path.read_text())
    runtime = time.perf_counter() - start
    if status in ("infeasible", "unbounded", "error", "timeout") and not assignment:
        return SolverResult(status=status, backend=f"external:{command}", runtime_seconds=runtime)
    x = np.zeros(model.n_vars)
    names = {_safe_name(i, v.name): i for i, v in enumerate(model.variables)}
    for name, value in assignment.items():
        if name in names:
            x[names[name]] = value
    objective = model.objective_value(x)
    violation = model.constraint_violation(x)
    if violation > 1e-5:
        return SolverResult(status="error", backend=f"external:{command}", runtime_seconds=runtime,
                            message=f"external solution violates constraints by {violation:.2e}")
    return SolverResult(status=status, x=x, objective=objective, bound=objective,
                        gap=0.0 if status == "optimal" else None,
                        runtime_seconds=runtime, backend=f"external:{command}")
