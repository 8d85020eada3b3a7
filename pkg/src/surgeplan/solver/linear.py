"""Generic linear/mixed-integer model container shared by all solver backends."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"
INTEGER = "integer"

LE = "<="
GE = ">="
EQ = "=="


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = math.inf
    kind: str = CONTINUOUS
    # integrality holds automatically at any optimum (given nonnegative costs),
    # so exact backends may relax these and repair afterwards
    implied_integral: bool = False


@dataclass
class Constraint:
    tag: str
    coefs: dict[int, float]
    sense: str
    rhs: float


@dataclass
class LinearModel:
    """min c.x subject to linear rows and variable bounds (senses <=, >=, ==)."""

    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    objective_constant: float = 0.0
    # backend hints, e.g. distrust_presolve (see solver.highs)
    metadata: dict = field(default_factory=dict)

    def add_variable(self, name: str, lb: float = 0.0, ub: float = math.inf,
                     kind: str = CONTINUOUS, implied_integral: bool = False) -> int:
        self.variables.append(Variable(name, float(lb), float(ub), kind, implied_integral))
        return len(self.variables) - 1

    def add_constraint(self, tag: str, coefs: Mapping[int, float], sense: str, rhs: float) -> int:
        if sense not in (LE, GE, EQ):
            raise ValueError(f"unknown constraint sense {sense!r}")
        clean = {int(i): float(c) for i, c in coefs.items() if c != 0.0}
        self.constraints.append(Constraint(tag, clean, sense, float(rhs)))
        return len(self.constraints) - 1

    def add_objective_term(self, var: int, coef: float) -> None:
        if coef:
            self.objective[var] = self.objective.get(var, 0.0) + float(coef)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def integer_indices(self, include_implied: bool = True) -> list[int]:
        return [
            i for i, v in enumerate(self.variables)
            if v.kind in (BINARY, INTEGER) and (include_implied or not v.implied_integral)
        ]

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for i, coef in self.objective.items():
            c[i] = coef
        return c

    def bounds_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        return lb, ub

    def objective_value(self, x: Sequence[float]) -> float:
        return float(sum(coef * x[i] for i, coef in self.objective.items()) + self.objective_constant)

    def constraint_violation(self, x: Sequence[float]) -> float:
        """Largest violation of any row or bound (0 means feasible)."""
        worst = 0.0
        for v, xi in zip(self.variables, x):
            worst = max(worst, v.lb - xi, xi - v.ub)
        for con in self.constraints:
            lhs = sum(coef * x[i] for i, coef in con.coefs.items())
            if con.sense == LE:
                worst = max(worst, lhs - con.rhs)
            elif con.sense == GE:
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        return worst

    def tag_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for con in self.constraints:
            counts[con.tag] = counts.get(con.tag, 0) + 1
        return counts


@dataclass
class SolverResult:
    status: str  # optimal | feasible | infeasible | unbounded | timeout | error
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    bound: Optional[float] = None
    runtime_seconds: float = 0.0
    gap: Optional[float] = None
    node_count: int = 0
    backend: str = ""
    message: str = ""

    @property
    def has_solution(self) -> bool:
        return self.x is not None and self.status in ("optimal", "feasible", "timeout")
