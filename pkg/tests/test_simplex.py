import math

import numpy as np
import pytest

from surgeplan.solver import GE, LE, EQ, LinearModel
from surgeplan.solver.highs import solve_lp_highs
from surgeplan.solver.simplex import solve_lp_simplex


def test_single_bound_maximization():
    m = LinearModel()
    x = m.add_variable("x", 0, 10)
    m.add_constraint("cap", {x: 1.0}, LE, 3.0)
    m.add_objective_term(x, -1.0)
    res = solve_lp_simplex(m)
    assert res.status == "optimal"
    assert res.x[x] == pytest.approx(3.0)


def test_envelope_lp_fixture():
    # maximize x0 with a shared deviation budget of 2 across two coordinates
    m = LinearModel()
    x = [m.add_variable(f"x{t}", 8.0, 12.0) for t in range(2)]
    d = [m.add_variable(f"d{t}", 0.0, 2.0) for t in range(2)]
    for t in range(2):
        m.add_constraint("link", {x[t]: 1.0, d[t]: -1.0}, EQ, 10.0)
    m.add_constraint("budget", {d[0]: 1.0, d[1]: 1.0}, LE, 2.0)
    m.add_objective_term(x[0], -1.0)
    res = solve_lp_simplex(m)
    assert res.status == "optimal"
    assert res.x[x[0]] == pytest.approx(12.0)


def test_infeasible_box():
    m = LinearModel()
    m.add_variable("x", 5.0, 2.0)
    res = solve_lp_simplex(m)
    assert res.status == "infeasible"


def test_infeasible_constraints():
    m = LinearModel()
    x = m.add_variable("x", 0, 10)
    m.add_constraint("lo", {x: 1.0}, GE, 8.0)
    m.add_constraint("hi", {x: 1.0}, LE, 3.0)
    assert solve_lp_simplex(m).status == "infeasible"


def test_unbounded_direction():
    m = LinearModel()
    x = m.add_variable("x", 0, math.inf)
    m.add_constraint("r", {x: -1.0}, LE, 0.0)
    m.add_objective_term(x, -1.0)
    assert solve_lp_simplex(m).status == "unbounded"


def test_negative_lower_bounds_and_equalities():
    m = LinearModel()
    x = m.add_variable("x", -5, 5)
    y = m.add_variable("y", -5, 5)
    m.add_constraint("sum", {x: 1.0, y: 1.0}, EQ, 1.0)
    m.add_objective_term(x, 1.0)
    m.add_objective_term(y, 2.0)
    res = solve_lp_simplex(m)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(1 * 5 + 2 * -4) or res.objective == pytest.approx(-4)


def test_degenerate_lp_terminates():
    # many redundant constraints through the same vertex (classic cycling bait)
    m = LinearModel()
    xs = [m.add_variable(f"x{i}", 0, 10) for i in range(4)]
    for i in range(4):
        for j in range(i + 1, 4):
            m.add_constraint("r", {xs[i]: 1.0, xs[j]: 1.0}, LE, 0.0)
    for x in xs:
        m.add_objective_term(x, -1.0)
    res = solve_lp_simplex(m)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(0.0, abs=1e-9)


def test_random_lps_match_highs():
    rng = np.random.default_rng(99)
    for trial in range(60):
        n = int(rng.integers(2, 14))
        m = LinearModel()
        xs = []
        for i in range(n):
            lo = float(rng.integers(-3, 1))
            hi = lo + float(rng.integers(1, 8))
            xs.append(m.add_variable(f"x{i}", lo, hi))
        for _ in range(int(rng.integers(1, 7))):
            coefs = {xs[i]: float(rng.integers(-3, 4)) for i in range(n) if rng.random() < 0.6}
            if not coefs:
                continue
            sense = [LE, GE, EQ][int(rng.integers(0, 3))]
            m.add_constraint("r", coefs, sense, float(rng.integers(-6, 10)))
        for i in range(n):
            m.add_objective_term(xs[i], float(rng.integers(-5, 6)))
        mine = solve_lp_simplex(m)
        ref = solve_lp_highs(m)
        assert mine.status == ref.status, f"trial {trial}: {mine.status} vs {ref.status}"
        if mine.status == "optimal":
            assert mine.objective == pytest.approx(ref.objective, abs=1e-6), f"trial {trial}"
