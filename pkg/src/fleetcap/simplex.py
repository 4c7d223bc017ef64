"""Bounded-variable two-phase revised simplex for the LP relaxation.

Every row ``a x (sense) b`` gets a logical (slack) column so the working
system is ``A x + s = b`` with bounds on ``s`` encoding the sense:
``<=`` rows have ``s >= 0``, ``>=`` rows ``s <= 0``, ``=`` rows ``s = 0``.
Nonbasic variables sit at one of their bounds (or at zero if free), so the
basis stays at ``n_rows`` columns regardless of how many variables have
finite upper bounds.

Phase 1 adds an artificial column only for rows that the starting point
(every structural at its lower bound) violates and minimizes their sum.
Phase 2 fixes the artificials at zero and optimizes the real objective.

Duals ``y`` follow the minimization convention: reduced costs are
``d = c - A^T y``; ``<=`` rows have ``y <= 0``, ``>=`` rows ``y >= 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
NUMERIC_FAILURE = "NumericFailure"
ITERATION_LIMIT = "IterationLimit"

_BASIC, _LOWER, _UPPER, _FREE = 0, 1, 2, 3
_STATUS_NAMES = {_BASIC: "basic", _LOWER: "lower", _UPPER: "upper", _FREE: "free"}


@dataclass(frozen=True)
class SimplexOptions:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-7
    pivot_tol: float = 1e-9
    refactor_every: int = 100
    bland_after: int = 1000
    max_iter: int | None = None
    verbose: bool = False


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: np.ndarray | None
    objective: float
    basis: tuple = ()
    col_status: tuple = ()
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    phase1_objective: float = 0.0
    ray: np.ndarray | None = None
    message: str = ""

    @property
    def is_optimal(self):
        return self.status == OPTIMAL


class SingularBasis(ArithmeticError):
    pass


class RevisedSimplex:
    """One LP solve. Holds mutable working state; not shareable across threads."""

    def __init__(self, c, A, b, senses, lb, ub, options=None):
        self.opts = options or SimplexOptions()
        self.c = np.asarray(c, dtype=float)
        A = np.asarray(A, dtype=float)
        self.m, self.n = A.shape
        self.b = np.asarray(b, dtype=float)
        self.lb_struct = np.asarray(lb, dtype=float)
        self.ub_struct = np.asarray(ub, dtype=float)
        self.senses = tuple(senses)
        if len(self.c) != self.n or len(self.b) != self.m or len(self.senses) != self.m:
            raise ValueError("inconsistent LP dimensions")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b))):
            raise ValueError("LP data must be finite")
        self.A_struct = A
        self.iterations = 0

    # -- setup -------------------------------------------------------------

    def _setup(self):
        m, n = self.m, self.n
        slack_lb = np.array([0.0 if s in ("<=", "=") else -math.inf for s in self.senses])
        slack_ub = np.array([math.inf if s == "<=" else 0.0 for s in self.senses])

        x_struct = np.where(
            np.isfinite(self.lb_struct),
            self.lb_struct,
            np.where(np.isfinite(self.ub_struct), self.ub_struct, 0.0),
        )
        resid = self.b - self.A_struct @ x_struct

        art_rows, art_signs = [], []
        slack_val = np.zeros(m)
        slack_basic = np.zeros(m, dtype=bool)
        for r in range(m):
            lo, hi = slack_lb[r], slack_ub[r]
            if lo - self.opts.feas_tol <= resid[r] <= hi + self.opts.feas_tol:
                slack_basic[r] = True
                slack_val[r] = resid[r]
            else:
                bound = hi if resid[r] > hi else lo
                slack_val[r] = bound
                art_rows.append(r)
                art_signs.append(1.0 if resid[r] - bound > 0 else -1.0)

        k = len(art_rows)
        self.n_art = k
        N = n + m + k
        self.N = N
        A = np.zeros((m, N))
        A[:, :n] = self.A_struct
        A[:, n:n + m] = np.eye(m)
        for a, (r, sgn) in enumerate(zip(art_rows, art_signs)):
            A[r, n + m + a] = sgn
        self.A = A
        self.lb = np.concatenate([self.lb_struct, slack_lb, np.zeros(k)])
        self.ub = np.concatenate([self.ub_struct, slack_ub, np.full(k, math.inf)])

        self.x = np.zeros(N)
        self.x[:n] = x_struct
        self.x[n:n + m] = slack_val
        self.status = np.empty(N, dtype=np.int8)
        for j in range(n):
            if np.isfinite(self.lb[j]):
                self.status[j] = _LOWER
            elif np.isfinite(self.ub[j]):
                self.status[j] = _UPPER
            else:
                self.status[j] = _FREE
        self.basis = np.empty(m, dtype=np.int64)
        art_of_row = {r: n + m + a for a, r in enumerate(art_rows)}
        for r in range(m):
            if slack_basic[r]:
                self.basis[r] = n + r
                self.status[n + r] = _BASIC
            else:
                j = art_of_row[r]
                self.basis[r] = j
                self.status[j] = _BASIC
                self.status[n + r] = _UPPER if slack_val[r] == slack_ub[r] else _LOWER
                self.x[j] = abs(resid[r] - slack_val[r])
        self.Binv = np.eye(m)
        for r in art_rows:
            self.Binv[r, r] = 1.0 / A[r, art_of_row[r]]

    # -- linear algebra ----------------------------------------------------

    def _refactor(self):
        if self.m == 0:
            return
        B = self.A[:, self.basis]
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SingularBasis(str(exc)) from exc
        if not np.all(np.isfinite(Binv)) or np.linalg.norm(B, 1) * np.linalg.norm(Binv, 1) > 1e13:
            raise SingularBasis("ill-conditioned basis")
        self.Binv = Binv
        nonbasic = self.status != _BASIC
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = Binv @ rhs

    def _pivot_update(self, r, alpha):
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row

    # -- main loop ---------------------------------------------------------

    def _run(self, cost, max_iter):
        """Primal simplex iterations on ``cost``; returns a status string."""
        opts = self.opts
        degenerate = 0
        use_bland = False
        since_refactor = 0
        while True:
            if self.iterations >= max_iter:
                return ITERATION_LIMIT
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.A

            st = self.status
            fixed = self.lb == self.ub
            can_up = ((st == _LOWER) | (st == _FREE)) & ~fixed & (d < -opts.opt_tol)
            can_down = ((st == _UPPER) | (st == _FREE)) & ~fixed & (d > opts.opt_tol)
            eligible = np.flatnonzero(can_up | can_down)
            if eligible.size == 0:
                return OPTIMAL
            if use_bland:
                j = int(eligible[0])
            else:
                j = int(eligible[np.argmax(np.abs(d[eligible]))])
            direction = 1.0 if can_up[j] else -1.0

            alpha = self.Binv @ self.A[:, j]
            # basic values move by -direction * theta * alpha
            step = direction * alpha
            xb = self.x[self.basis]
            lbB = self.lb[self.basis]
            ubB = self.ub[self.basis]

            theta = self.ub[j] - self.lb[j]
            leave = -1
            leave_to = _LOWER
            best_mag = 0.0
            for r in np.flatnonzero(np.abs(step) > opts.pivot_tol):
                s = step[r]
                if s > 0:
                    if not np.isfinite(lbB[r]):
                        continue
                    t = max(xb[r] - lbB[r], 0.0) / s
                    to = _LOWER
                else:
                    if not np.isfinite(ubB[r]):
                        continue
                    t = max(ubB[r] - xb[r], 0.0) / -s
                    to = _UPPER
                if t < theta - 1e-12:
                    theta, leave, leave_to, best_mag = t, r, to, abs(s)
                elif leave >= 0 and abs(t - theta) <= 1e-12:
                    if use_bland:
                        if self.basis[r] < self.basis[leave]:
                            leave, leave_to, best_mag = r, to, abs(s)
                    elif abs(s) > best_mag:
                        leave, leave_to, best_mag = r, to, abs(s)
                elif leave < 0 and abs(t - theta) <= 1e-12 and np.isfinite(theta):
                    # tie with the entering variable's own bound flip: prefer a basis change
                    theta, leave, leave_to, best_mag = t, r, to, abs(s)

            if not np.isfinite(theta):
                self._ray = (j, direction, alpha.copy())
                return UNBOUNDED

            self.iterations += 1
            if theta <= 1e-12:
                degenerate += 1
                if degenerate > opts.bland_after and not use_bland:
                    use_bland = True
                    log.debug("switching to Bland's rule after %d degenerate pivots", degenerate)
            else:
                degenerate = 0
                use_bland = False

            self.x[j] += direction * theta
            self.x[self.basis] = xb - theta * step

            if leave < 0:
                self.status[j] = _UPPER if direction > 0 else _LOWER
                if opts.verbose:
                    log.debug("it %d: bound flip col %d theta=%g", self.iterations, j, theta)
                continue

            out = int(self.basis[leave])
            self.x[out] = self.lb[out] if leave_to == _LOWER else self.ub[out]
            self.status[out] = leave_to
            self.status[j] = _BASIC
            self.basis[leave] = j
            self._pivot_update(leave, alpha)
            since_refactor += 1
            if opts.verbose:
                log.debug("it %d: enter %d leave %d theta=%g obj=%.10g",
                          self.iterations, j, out, theta, cost @ self.x)
            if since_refactor >= opts.refactor_every:
                self._refactor()
                since_refactor = 0

    def solve(self):
        opts = self.opts
        self._setup()
        self._ray = None
        n, m = self.n, self.m
        max_iter = opts.max_iter or 50 * (self.N + m) + 1000
        try:
            if self.n_art:
                cost1 = np.zeros(self.N)
                cost1[n + m:] = 1.0
                status = self._run(cost1, max_iter)
                if status != OPTIMAL:
                    return self._result(status, message="phase 1: " + status)
                self._refactor()
                phase1 = float(self.x[n + m:].sum())
                # absolute test: scaling by |b| would let big budget or cap rows hide real infeasibility
                if phase1 > opts.feas_tol:
                    return self._result(INFEASIBLE, phase1=phase1)
                self.ub[n + m:] = 0.0
                self.x[n + m:] = np.minimum(self.x[n + m:], 0.0)
                for a in range(n + m, self.N):
                    if self.status[a] != _BASIC:
                        self.status[a] = _LOWER
                self._refactor()
            cost2 = np.zeros(self.N)
            cost2[:n] = self.c
            status = self._run(cost2, max_iter)
            if status == OPTIMAL:
                self._refactor()
                # a refactor can expose residual infeasibility or price drift; polish once
                status = self._run(cost2, max_iter)
                self._refactor()
                worst = self._bound_violation()
                if status == OPTIMAL and worst > 1e3 * opts.feas_tol:
                    return self._result(NUMERIC_FAILURE, message=f"final basis violates bounds by {worst:.3g}")
            return self._result(status, cost=cost2)
        except SingularBasis as exc:
            return self._result(NUMERIC_FAILURE, message=str(exc))

    def _bound_violation(self):
        below = self.lb - self.x
        above = self.x - self.ub
        return float(max(np.max(below, initial=0.0), np.max(above, initial=0.0)))

    def _result(self, status, cost=None, phase1=0.0, message=""):
        n, m = self.n, self.m
        basis = tuple(int(b) for b in self.basis)
        col_status = tuple(_STATUS_NAMES[int(s)] for s in self.status[:n + m])
        if status == OPTIMAL:
            x = self.x[:n].copy()
            y = cost[self.basis] @ self.Binv
            d = self.c - y @ self.A_struct
            return LpSolution(OPTIMAL, x, float(self.c @ x), basis, col_status, y, d,
                              self.iterations, phase1, None, message)
        if status == UNBOUNDED:
            j, direction, alpha = self._ray
            ray = np.zeros(self.N)
            ray[j] = direction
            ray[self.basis] -= direction * alpha
            return LpSolution(UNBOUNDED, self.x[:n].copy(), -math.inf, basis, col_status,
                              iterations=self.iterations, ray=ray[:n], message=message)
        if status == INFEASIBLE:
            return LpSolution(INFEASIBLE, None, math.inf, basis, col_status,
                              iterations=self.iterations, phase1_objective=phase1, message=message)
        return LpSolution(status, None, math.nan, basis, col_status,
                          iterations=self.iterations, message=message)


def solve_lp(problem, lb=None, ub=None, options=None):
    """Solve the continuous relaxation of ``problem`` (integrality ignored).

    ``lb``/``ub`` override the problem's column bounds, which is how
    branch-and-bound nodes are expressed.
    """
    lb = problem.lb if lb is None else np.asarray(lb, dtype=float)
    ub = problem.ub if ub is None else np.asarray(ub, dtype=float)
    if np.any(lb > ub):
        return LpSolution(INFEASIBLE, None, math.inf, message="crossed column bounds")
    solver = RevisedSimplex(problem.c, problem.A, problem.b, problem.senses, lb, ub, options)
    return solver.solve()


@dataclass
class CertificateReport:
    primal_ok: bool
    dual_ok: bool
    slackness_ok: bool
    primal_objective: float
    dual_objective: float
    issues: list = field(default_factory=list)

    @property
    def passed(self):
        return self.primal_ok and self.dual_ok and self.slackness_ok

    @property
    def duality_gap(self):
        return abs(self.primal_objective - self.dual_objective)


def verify_lp_certificate(problem, solution, lb=None, ub=None, tol=1e-6):
    """Recheck an optimal LP solution from scratch.

    Primal feasibility, dual sign conditions and complementary slackness are
    recomputed from ``problem`` and the reported ``x`` and ``duals`` only; the
    solver's reduced costs are not trusted. Tolerances are absolute ``tol``
    scaled by the magnitude of the quantity being compared (at least 1).
    """
    lb = problem.lb if lb is None else np.asarray(lb, dtype=float)
    ub = problem.ub if ub is None else np.asarray(ub, dtype=float)
    issues = []
    x = np.asarray(solution.x, dtype=float)
    y = np.asarray(solution.duals, dtype=float) if solution.duals is not None else np.zeros(problem.n_rows)
    A = problem.A
    b = problem.b
    act = A @ x if problem.n_rows else np.zeros(0)

    def tol_for(*vals):
        return tol * max([1.0, *(abs(v) for v in vals if np.isfinite(v))])

    primal_ok = True
    for k in range(problem.n_cols):
        if x[k] < lb[k] - tol_for(lb[k]) or x[k] > ub[k] + tol_for(ub[k]):
            primal_ok = False
            issues.append(f"column {k} out of bounds: {x[k]}")
    for r, sense in enumerate(problem.senses):
        slack = act[r] - b[r]
        t = tol_for(b[r], act[r])
        if (sense == "<=" and slack > t) or (sense == ">=" and slack < -t) or (sense == "=" and abs(slack) > t):
            primal_ok = False
            issues.append(f"row {r} violated: {act[r]} {sense} {b[r]}")

    d = problem.c - (A.T @ y if problem.n_rows else 0.0)
    dual_ok = True
    cscale = max(1.0, float(np.abs(problem.c).max(initial=0.0)))
    dtol = tol * cscale
    for r, sense in enumerate(problem.senses):
        if (sense == "<=" and y[r] > dtol) or (sense == ">=" and y[r] < -dtol):
            dual_ok = False
            issues.append(f"row {r} dual has wrong sign: {y[r]}")

    slackness_ok = True
    dual_obj = float(b @ y) if problem.n_rows else 0.0
    for k in range(problem.n_cols):
        at_lb = np.isfinite(lb[k]) and x[k] <= lb[k] + tol_for(lb[k])
        at_ub = np.isfinite(ub[k]) and x[k] >= ub[k] - tol_for(ub[k])
        if d[k] > dtol and not at_lb:
            if not np.isfinite(lb[k]):
                dual_ok = False
                issues.append(f"column {k}: positive reduced cost with no lower bound")
            else:
                slackness_ok = False
                issues.append(f"column {k}: reduced cost {d[k]} > 0 but not at lower bound")
        if d[k] < -dtol and not at_ub:
            if not np.isfinite(ub[k]):
                dual_ok = False
                issues.append(f"column {k}: negative reduced cost with no upper bound")
            else:
                slackness_ok = False
                issues.append(f"column {k}: reduced cost {d[k]} < 0 but not at upper bound")
        if d[k] > 0 and np.isfinite(lb[k]):
            dual_obj += d[k] * lb[k]
        elif d[k] < 0 and np.isfinite(ub[k]):
            dual_obj += d[k] * ub[k]
    for r in range(problem.n_rows):
        if abs(y[r]) > dtol and abs(act[r] - b[r]) > tol_for(b[r], act[r]):
            slackness_ok = False
            issues.append(f"row {r}: nonzero dual {y[r]} on a slack row")

    primal_obj = float(problem.c @ x)
    if abs(primal_obj - dual_obj) > tol_for(primal_obj, dual_obj):
        slackness_ok = False
        issues.append(f"duality gap {primal_obj - dual_obj}")
    return CertificateReport(primal_ok, dual_ok, slackness_ok, primal_obj, dual_obj, issues)
