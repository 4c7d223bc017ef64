"""Best-bound branch-and-bound over the simplex relaxation."""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .simplex import NUMERIC_FAILURE, OPTIMAL, UNBOUNDED, SimplexOptions, solve_lp

log = logging.getLogger(__name__)

ILP_OPTIMAL = "Optimal"
ILP_INFEASIBLE = "Infeasible"
ILP_UNBOUNDED = "Unbounded"
NODE_LIMIT = "NodeLimit"
TIME_LIMIT = "TimeLimit"
SOLVER_ERROR = "SolverError"


@dataclass(frozen=True)
class SolveParams:
    int_tol: float = 1e-6
    abs_gap: float = 1e-6
    rel_gap: float = 1e-9
    node_limit: int | None = None
    time_limit: float | None = None
    debug: bool = False
    verbose: bool = False
    simplex: SimplexOptions = field(default_factory=SimplexOptions)

    def __post_init__(self):
        for name in ("int_tol", "abs_gap", "rel_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be > 0")


@dataclass(frozen=True)
class IlpResult:
    status: str
    x: np.ndarray | None
    objective: float
    best_bound: float
    gap: float
    nodes: int
    lp_iterations: int = 0
    incumbents: tuple = ()
    message: str = ""

    @property
    def is_optimal(self):
        return self.status == ILP_OPTIMAL

    @property
    def has_incumbent(self):
        return self.x is not None


@dataclass(order=True)
class _Node:
    bound: float
    node_id: int
    depth: int = field(compare=False)
    lb: np.ndarray = field(compare=False, repr=False)
    ub: np.ndarray = field(compare=False, repr=False)
    x: np.ndarray = field(compare=False, repr=False)


def _gap_tol(params, incumbent):
    return max(params.abs_gap, params.rel_gap * abs(incumbent))


def _fractional(x, integer, tol):
    frac = np.abs(x - np.rint(x))
    return np.flatnonzero(integer & (frac > tol))


def solve_ilp(problem, params=None):
    """Minimize ``problem`` exactly over its integer columns.

    Nodes are expanded smallest LP bound first (ties by node id). Branching
    picks the most fractional column (ties by lowest index) and evaluates the
    floor child before the ceiling child.
    """
    params = params or SolveParams()
    start = time.monotonic()
    integer = problem.integer
    incumbent_x = None
    incumbent = math.inf
    history = []
    nodes = 0
    lp_iters = 0
    heap = []

    def evaluate(lb, ub, depth, parent_bound):
        nonlocal nodes, lp_iters, incumbent, incumbent_x
        node_id = nodes
        nodes += 1
        lp = solve_lp(problem, lb, ub, params.simplex)
        lp_iters += lp.iterations
        if lp.status == NUMERIC_FAILURE or lp.status not in (OPTIMAL, UNBOUNDED, "Infeasible"):
            raise _SolverFailure(f"node {node_id} (depth {depth}): {lp.status} {lp.message}")
        if lp.status == UNBOUNDED:
            raise _Unbounded(node_id)
        if lp.status != OPTIMAL:
            return None
        bound = lp.objective
        if params.debug and parent_bound is not None:
            assert bound >= parent_bound - 1e-6 * max(1.0, abs(parent_bound)), (
                f"node {node_id}: bound {bound} below parent {parent_bound}"
            )
        frac = _fractional(lp.x, integer, params.int_tol)
        if params.verbose:
            log.info("node %d depth %d bound %.10g fractional %d", node_id, depth, bound, frac.size)
        if frac.size == 0:
            snapped = np.where(integer, np.rint(lp.x), lp.x)
            snapped[snapped == 0] = 0.0
            if not problem.is_feasible(snapped, tol=1e-6):
                log.warning("node %d: snapped point failed the feasibility recheck; dropped", node_id)
                return None
            obj = float(problem.c @ snapped)
            if obj < incumbent - 1e-9 * max(1.0, abs(incumbent) if math.isfinite(incumbent) else 1.0):
                incumbent, incumbent_x = obj, snapped
                history.append(obj)
                if params.verbose:
                    log.info("node %d: new incumbent %.10g", node_id, obj)
            return None
        if bound >= incumbent - _gap_tol(params, incumbent):
            return None
        return _Node(bound, node_id, depth, lb, ub, lp.x)

    def result(status, message=""):
        if heap and math.isfinite(incumbent):
            best = min(heap[0].bound, incumbent)
        elif heap:
            best = heap[0].bound
        else:
            best = incumbent
        gap = incumbent - best if math.isfinite(incumbent) else math.inf
        return IlpResult(status, incumbent_x, incumbent, best, max(gap, 0.0), nodes,
                         lp_iters, tuple(history), message)

    try:
        root = evaluate(problem.lb.copy(), problem.ub.copy(), 0, None)
        if root is not None:
            heapq.heappush(heap, root)
        while heap:
            if heap[0].bound >= incumbent - _gap_tol(params, incumbent):
                heap.clear()
                break
            if params.node_limit is not None and nodes >= params.node_limit:
                return result(NODE_LIMIT)
            if params.time_limit is not None and time.monotonic() - start > params.time_limit:
                return result(TIME_LIMIT)
            node = heapq.heappop(heap)
            if node.bound >= incumbent - _gap_tol(params, incumbent):
                continue
            frac = _fractional(node.x, integer, params.int_tol)
            dist = np.abs(node.x[frac] - np.rint(node.x[frac]))
            k = int(frac[np.argmax(dist)])  # argmax takes the first (lowest) index on ties
            v = node.x[k]
            if not node.lb[k] < v < node.ub[k]:
                # a relaxation point outside its own bounds would regenerate the parent node forever
                raise _SolverFailure(f"node {node.node_id}: column {k} value {v} outside [{node.lb[k]}, {node.ub[k]}]")
            ub_floor = node.ub.copy()
            ub_floor[k] = math.floor(v)
            lb_ceil = node.lb.copy()
            lb_ceil[k] = math.ceil(v)
            for lb, ub in ((node.lb, ub_floor), (lb_ceil, node.ub)):
                child = evaluate(lb, ub, node.depth + 1, node.bound)
                if child is not None:
                    heapq.heappush(heap, child)
    except _SolverFailure as exc:
        return result(SOLVER_ERROR, str(exc))
    except _Unbounded as exc:
        return IlpResult(ILP_UNBOUNDED, None, -math.inf, -math.inf, math.inf, nodes, lp_iters,
                         message=f"relaxation unbounded at node {exc.args[0]}")

    if incumbent_x is None:
        return result(ILP_INFEASIBLE)
    return result(ILP_OPTIMAL)


class _SolverFailure(Exception):
    pass


class _Unbounded(Exception):
    pass
