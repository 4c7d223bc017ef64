import itertools
import math

import numpy as np
import pytest

from fleetcap.bnb import (
    ILP_INFEASIBLE,
    ILP_OPTIMAL,
    NODE_LIMIT,
    SOLVER_ERROR,
    TIME_LIMIT,
    SolveParams,
    solve_ilp,
)
from fleetcap.generate import GenSpec, generate
from fleetcap.ilp import IlpProblem, Row, build_ilp
from fleetcap.model import Dimensions
from fleetcap.simplex import RevisedSimplex, SingularBasis

INF = math.inf


def ip(c, rows, ub=None):
    n = len(c)
    rr = [Row(f"r{k}", tuple(range(n)), tuple(a), s, b) for k, (a, s, b) in enumerate(rows)]
    return IlpProblem(c, [0.0] * n, ub or [INF] * n, [True] * n, rr)


def lattice_optimum(problem, box):
    """Enumerate every integer point of ``[0, box]^n``."""
    best, arg = INF, None
    for pt in itertools.product(range(box + 1), repeat=problem.n_cols):
        v = np.array(pt, dtype=float)
        if problem.is_feasible(v):
            val = float(problem.c @ v)
            if val < best:
                best, arg = val, pt
    return best, arg


def test_single_branch():
    p = ip([-1], [([2], "<=", 3)])
    r = solve_ilp(p)
    assert r.status == ILP_OPTIMAL
    assert r.x.tolist() == [1.0] and r.objective == -1.0


def test_knapsack_pair():
    # maximize 5x + 4y s.t. 6x + 5y <= 10
    p = ip([-5, -4], [([6, 5], "<=", 10)])
    best, arg = lattice_optimum(p, 2)
    assert (best, arg) == (-8.0, (0, 2))
    r = solve_ilp(p)
    assert -r.objective == 8.0 and r.x.tolist() == [0.0, 2.0]


def test_infeasible_integer_problem():
    # 0.2 <= x <= 0.8 has LP points but no integers
    p = ip([1], [([1], ">=", 0.2), ([1], "<=", 0.8)])
    r = solve_ilp(p)
    assert r.status == ILP_INFEASIBLE and r.x is None


@pytest.mark.parametrize("seed", range(20))
def test_random_small_ips_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    n, m = 3, 3
    A = rng.integers(-2, 6, size=(m, n)).astype(float)
    b = rng.integers(3, 15, size=m).astype(float)
    c = rng.integers(-9, 4, size=n).astype(float)
    p = ip(c, [(A[k], "<=", b[k]) for k in range(m)], ub=[4.0] * n)
    best, _ = lattice_optimum(p, 4)
    r = solve_ilp(p, SolveParams(debug=True))
    assert r.status == ILP_OPTIMAL
    assert r.objective == pytest.approx(best, abs=1e-6)
    assert p.is_feasible(r.x)


def test_incumbents_strictly_decrease_and_deterministic():
    inst = generate(GenSpec(Dimensions(2, 3, 2, 2), seed=11))
    p, _ = build_ilp(inst.with_cap(650.0), "enhanced")
    a = solve_ilp(p, SolveParams(debug=True))
    b = solve_ilp(p, SolveParams(debug=True))
    assert all(x > y for x, y in zip(a.incumbents, a.incumbents[1:]))
    assert a.nodes == b.nodes and np.array_equal(a.x, b.x)


def test_node_limit():
    rng = np.random.default_rng(0)
    n = 12
    w = rng.integers(20, 40, size=n).astype(float)
    p = ip(-w - rng.random(n), [(w, "<=", float(w.sum() / 2) + 0.5)], ub=[1.0] * n)
    r = solve_ilp(p, SolveParams(node_limit=3))
    assert r.status == NODE_LIMIT and r.nodes <= 4


def test_time_limit():
    rng = np.random.default_rng(1)
    n = 30
    w = rng.integers(100, 200, size=n).astype(float)
    p = ip(-w - rng.random(n), [(w, "<=", float(w.sum() / 2) + 0.5)], ub=[1.0] * n)
    r = solve_ilp(p, SolveParams(time_limit=1e-3))
    assert r.status in (TIME_LIMIT, ILP_OPTIMAL)


def test_numeric_failure_propagates(monkeypatch):
    def boom(self):
        raise SingularBasis("forced")

    monkeypatch.setattr(RevisedSimplex, "_refactor", boom)
    r = solve_ilp(ip([-1], [([2], "<=", 3)]))
    assert r.status == SOLVER_ERROR and "node 0" in r.message


def test_params_validate():
    with pytest.raises(ValueError):
        SolveParams(int_tol=0)


@pytest.mark.parametrize("seed", range(5))
def test_agrees_with_scipy_milp(seed):
    from scipy.optimize import Bounds, LinearConstraint, milp

    inst = generate(GenSpec(Dimensions(2, 3, 2, 2), seed=seed))
    p, _ = build_ilp(inst.with_cap(600.0), "enhanced")
    lo = np.array([-INF if r.sense == "<=" else r.rhs for r in p.rows])
    hi = np.array([INF if r.sense == ">=" else r.rhs for r in p.rows])
    ref = milp(p.c, constraints=LinearConstraint(p.A, lo, hi), integrality=np.ones(p.n_cols),
               bounds=Bounds(p.lb, p.ub))
    r = solve_ilp(p)
    if ref.status == 2:
        assert r.status == ILP_INFEASIBLE
    else:
        assert r.objective == pytest.approx(ref.fun, abs=1e-6)


def test_relaxation_outside_bounds_is_a_solver_error(monkeypatch):
    import fleetcap.bnb as bnb
    from fleetcap.simplex import OPTIMAL, LpSolution

    def drifted(problem, lb, ub, options):
        return LpSolution(OPTIMAL, np.array([-0.25]), 0.25)

    monkeypatch.setattr(bnb, "solve_lp", drifted)
    r = solve_ilp(ip([-1], [([2], "<=", 3)]))
    assert r.status == SOLVER_ERROR and "outside" in r.message
