"""Matrix form of the fleet-assignment model and CPLEX-LP text export.

Columns are laid out kind-major (x, xr, y, yr, q, qr), each block in
lexicographic index order. Rows follow the constraint families in order:
fleet balance, rental balance, demand cover, budget, organizational service
link, rental service link and, for the enhanced variant, the emission cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

from .model import (
    DEFAULT_OPTIONS,
    ConfigurationError,
    DimensionError,
    Solution,
    Variant,
)

ROUTE_KINDS = ("x", "xr")
ORIGIN_KINDS = ("y", "yr", "q", "qr")
KINDS = ROUTE_KINDS + ORIGIN_KINDS
SENSES = ("<=", ">=", "=")


@dataclass(frozen=True)
class Row:
    name: str
    cols: tuple
    vals: tuple
    sense: str
    rhs: float


@dataclass(frozen=True)
class IlpProblem:
    """Minimize ``c @ x`` subject to sparse rows and column bounds.

    ``ub`` may contain ``inf``. ``integer[k]`` marks integrality of column k.
    """

    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    rows: tuple
    col_names: tuple = ()

    def __post_init__(self):
        n = len(self.c)
        for name in ("c", "lb", "ub"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise DimensionError(f"{name} must have length {n}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        integer = np.array(self.integer, dtype=bool)
        if integer.shape != (n,):
            raise DimensionError(f"integer must have length {n}")
        integer.setflags(write=False)
        object.__setattr__(self, "integer", integer)
        object.__setattr__(self, "rows", tuple(self.rows))
        if np.any(self.lb > self.ub):
            raise ValueError("column lower bound exceeds upper bound")
        for row in self.rows:
            if row.sense not in SENSES:
                raise ValueError(f"row {row.name}: bad sense {row.sense!r}")
            if len(row.cols) != len(row.vals):
                raise ValueError(f"row {row.name}: cols/vals length mismatch")
            if any(c < 0 or c >= n for c in row.cols):
                raise ValueError(f"row {row.name}: column index out of range")
        if not self.col_names:
            object.__setattr__(self, "col_names", tuple(f"c{k}" for k in range(n)))

    @property
    def n_cols(self):
        return len(self.c)

    @property
    def n_rows(self):
        return len(self.rows)

    @cached_property
    def A(self):
        """Dense constraint matrix (n_rows x n_cols)."""
        A = np.zeros((self.n_rows, self.n_cols))
        for r, row in enumerate(self.rows):
            for col, val in zip(row.cols, row.vals):
                A[r, col] += val
        A.setflags(write=False)
        return A

    @cached_property
    def b(self):
        b = np.array([row.rhs for row in self.rows], dtype=float)
        b.setflags(write=False)
        return b

    @cached_property
    def senses(self):
        return tuple(row.sense for row in self.rows)

    def row_activity(self, values):
        return self.A @ np.asarray(values, dtype=float)

    def unsatisfied_rows(self, values, tol=1e-6):
        """Indices of rows violated by ``values`` beyond ``tol``."""
        act = self.row_activity(values)
        bad = []
        for r, (a, row) in enumerate(zip(act, self.rows)):
            if row.sense == "<=" and a > row.rhs + tol:
                bad.append(r)
            elif row.sense == ">=" and a < row.rhs - tol:
                bad.append(r)
            elif row.sense == "=" and abs(a - row.rhs) > tol:
                bad.append(r)
        return bad

    def bounds_satisfied(self, values, tol=1e-6):
        v = np.asarray(values, dtype=float)
        return bool(np.all(v >= self.lb - tol) and np.all(v <= self.ub + tol))

    def is_feasible(self, values, tol=1e-6, check_integrality=True):
        v = np.asarray(values, dtype=float)
        if check_integrality and np.any(np.abs(v[self.integer] - np.rint(v[self.integer])) > tol):
            return False
        return self.bounds_satisfied(v, tol) and not self.unsatisfied_rows(v, tol)

    def with_objective(self, c):
        return IlpProblem(c, self.lb, self.ub, self.integer, self.rows, self.col_names)


class VarIndexMap:
    """Bijection between (kind, index tuple) and column positions.

    Route kinds (x, xr) take index (i, j, m, t); origin kinds (y, yr, q, qr)
    take (i, m, t). Indices are zero-based; names printed in LP text are
    one-based, e.g. ``x_1_2_1_1``.
    """

    def __init__(self, dims):
        self.dims = dims
        self._route = dims.I * dims.J * dims.M * dims.T
        self._origin = dims.I * dims.M * dims.T
        self.offsets = {}
        pos = 0
        for kind in KINDS:
            self.offsets[kind] = pos
            pos += self._route if kind in ROUTE_KINDS else self._origin
        self.n_cols = pos

    def shape(self, kind):
        return self.dims.route_shape if kind in ROUTE_KINDS else self.dims.origin_shape

    def column(self, kind, *index):
        return self.offsets[kind] + int(np.ravel_multi_index(index, self.shape(kind)))

    def block(self, kind):
        start = self.offsets[kind]
        return slice(start, start + int(np.prod(self.shape(kind))))

    def key(self, col):
        if not 0 <= col < self.n_cols:
            raise IndexError(col)
        for kind in reversed(KINDS):
            if col >= self.offsets[kind]:
                idx = np.unravel_index(col - self.offsets[kind], self.shape(kind))
                return kind, tuple(int(k) for k in idx)
        raise AssertionError("unreachable")

    def name(self, col):
        kind, idx = self.key(col)
        return kind + "_" + "_".join(str(k + 1) for k in idx)

    def names(self):
        return tuple(self.name(c) for c in range(self.n_cols))


def build_ilp(instance, variant=Variant.BASE, options=DEFAULT_OPTIONS):
    """Assemble the ILP for ``instance`` and return ``(problem, index_map)``."""
    variant = Variant(variant)
    if variant is Variant.ENHANCED and instance.emission_cap is None:
        raise ConfigurationError("enhanced variant requires an emission cap")
    d = instance.dims
    vmap = VarIndexMap(d)
    n = vmap.n_cols

    c = np.zeros(n)
    lb = np.zeros(n)
    ub = np.full(n, math.inf)
    V = instance.fleet_cap.astype(float)
    Vr = instance.rental_cap.astype(float)

    c[vmap.block("x")] = instance.travel_cost_org.ravel()
    c[vmap.block("xr")] = instance.travel_cost_rent.ravel()
    c[vmap.block("y")] = instance.stop_cost_org.ravel()
    c[vmap.block("yr")] = instance.stop_cost_rent.ravel()
    c[vmap.block("q")] = instance.op_cost.ravel()
    c[vmap.block("qr")] = instance.rent_cost.ravel()

    ub[vmap.block("x")] = np.broadcast_to(V[:, None, :, :], d.route_shape).ravel()
    ub[vmap.block("xr")] = np.broadcast_to(Vr[:, None, :, :], d.route_shape).ravel()
    ub[vmap.block("y")] = V.ravel()
    ub[vmap.block("yr")] = Vr.ravel()
    if options.bound_service:
        ub[vmap.block("q")] = V.ravel()
        ub[vmap.block("qr")] = Vr.ravel()

    col = vmap.column
    rows = []
    imt = list(product(range(d.I), range(d.M), range(d.T)))

    for kind, idle, cap, tag in (("x", "y", V, "fleet"), ("xr", "yr", Vr, "rental")):
        for i, m, t in imt:
            cols = [col(kind, i, j, m, t) for j in range(d.J)] + [col(idle, i, m, t)]
            rows.append(Row(f"{tag}_{i+1}_{m+1}_{t+1}", tuple(cols), (1.0,) * len(cols), "=", float(cap[i, m, t])))

    if options.per_mode_demand:
        for j, m, t in product(range(d.J), range(d.M), range(d.T)):
            cols = [col(k, i, j, m, t) for k in ROUTE_KINDS for i in range(d.I)]
            rhs = float(instance.demand[:, j, m, t].sum())
            rows.append(Row(f"demand_{j+1}_{m+1}_{t+1}", tuple(cols), (1.0,) * len(cols), ">=", rhs))
    else:
        for j, t in product(range(d.J), range(d.T)):
            cols = [col(k, i, j, m, t) for k in ROUTE_KINDS for i in range(d.I) for m in range(d.M)]
            rhs = float(instance.demand[:, j, :, t].sum())
            rows.append(Row(f"demand_{j+1}_{t+1}", tuple(cols), (1.0,) * len(cols), ">=", rhs))

    bcols, bvals = [], []
    for kind, cost in (("q", instance.op_cost), ("qr", instance.rent_cost)):
        for i, m, t in imt:
            bcols.append(col(kind, i, m, t))
            bvals.append(float(cost[i, m, t]))
    rows.append(Row("budget", tuple(bcols), tuple(bvals), "<=", instance.budget))

    for kind, svc, tag in (("x", "q", "service"), ("xr", "qr", "rservice")):
        for i, m, t in imt:
            cols = [col(kind, i, j, m, t) for j in range(d.J)] + [col(svc, i, m, t)]
            vals = [1.0] * d.J + [-1.0]
            rows.append(Row(f"{tag}_{i+1}_{m+1}_{t+1}", tuple(cols), tuple(vals), "<=", 0.0))

    if variant is Variant.ENHANCED and math.isfinite(instance.emission_cap):
        e_org, e_rent = instance.route_emission_factors()
        ecols, evals = [], []
        for kind, fac in (("x", e_org), ("xr", e_rent)):
            for i, j, m, t in product(range(d.I), range(d.J), range(d.M), range(d.T)):
                ecols.append(col(kind, i, j, m, t))
                evals.append(float(fac[i, j, m]))
        rows.append(Row("emission", tuple(ecols), tuple(evals), "<=", instance.emission_cap))

    problem = IlpProblem(c, lb, ub, np.ones(n, dtype=bool), tuple(rows), vmap.names())
    return problem, vmap


def emission_objective(instance, vmap):
    """Objective vector that prices each trip by its CO2 instead of its cost."""
    c = np.zeros(vmap.n_cols)
    e_org, e_rent = instance.route_emission_factors()
    T = instance.dims.T
    c[vmap.block("x")] = np.repeat(e_org[..., None], T, axis=-1).ravel()
    c[vmap.block("xr")] = np.repeat(e_rent[..., None], T, axis=-1).ravel()
    return c


def encode_solution(solution, vmap):
    if solution.x.shape != vmap.dims.route_shape or solution.y.shape != vmap.dims.origin_shape:
        raise DimensionError("solution does not match the index map dims")
    values = np.zeros(vmap.n_cols)
    for kind in KINDS:
        values[vmap.block(kind)] = getattr(solution, kind).ravel()
    return values


def extract_solution(values, vmap, tol=1e-6):
    """Read a column vector back into a ``Solution``.

    Entries must lie within ``tol`` of an integer; they are rounded.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (vmap.n_cols,):
        raise DimensionError(f"expected {vmap.n_cols} values, got {values.shape}")
    rounded = np.rint(values)
    if np.any(np.abs(values - rounded) > tol):
        raise ValueError("values are not integral within tolerance")
    rounded[rounded == 0] = 0.0  # drop -0.0
    parts = {kind: rounded[vmap.block(kind)].reshape(vmap.shape(kind)) for kind in KINDS}
    return Solution(**parts)


def _num(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return format(v, ".15g")


def _expr(terms, width=78):
    """Render ``[(coef, name), ...]`` as LP-format lines, wrapped."""
    pieces = []
    for k, (coef, name) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = name if mag == 1 else f"{_num(mag)} {name}"
        if k == 0:
            pieces.append(f"- {body}" if sign == "-" else body)
        else:
            pieces.append(f"{sign} {body}")
    lines, cur = [], ""
    for p in pieces:
        if cur and len(cur) + len(p) + 1 > width:
            lines.append(cur)
            cur = "   " + p
        else:
            cur = f"{cur} {p}" if cur else p
    lines.append(cur)
    return lines


def export_lp_text(problem, vmap=None):
    """CPLEX LP-format text for ``problem`` with readable variable names."""
    names = vmap.names() if vmap is not None else problem.col_names
    out = ["\\ fleet-assignment model", "Minimize"]
    obj = [(float(v), names[k]) for k, v in enumerate(problem.c) if v != 0]
    if not obj:
        obj = [(0.0, names[0])]
    first, *rest = _expr(obj)
    out.append(f" obj: {first}")
    out.extend(f" {line}" for line in rest)

    out.append("Subject To")
    for row in problem.rows:
        terms = [(float(v), names[c]) for c, v in zip(row.cols, row.vals) if v != 0]
        if not terms:
            terms = [(0.0, names[row.cols[0]] if row.cols else names[0])]
        lines = _expr(terms)
        lines[-1] = f"{lines[-1]} {row.sense} {_num(float(row.rhs))}"
        out.append(f" {row.name}: {lines[0]}")
        out.extend(f" {line}" for line in lines[1:])

    out.append("Bounds")
    for k in range(problem.n_cols):
        lo, hi = problem.lb[k], problem.ub[k]
        if math.isinf(hi):
            lo_txt = "-inf" if math.isinf(lo) else _num(lo)
            out.append(f" {names[k]} >= {lo_txt}")
        elif lo == hi:
            out.append(f" {names[k]} = {_num(lo)}")
        else:
            lo_txt = "-inf" if math.isinf(lo) else _num(lo)
            out.append(f" {lo_txt} <= {names[k]} <= {_num(hi)}")

    ints = [names[k] for k in range(problem.n_cols) if problem.integer[k]]
    if ints:
        out.append("Generals")
        line = ""
        for name in ints:
            if line and len(line) + len(name) + 1 > 78:
                out.append(line)
                line = ""
            line = f"{line} {name}"
        out.append(line)
    out.append("End")
    return "\n".join(out) + "\n"
