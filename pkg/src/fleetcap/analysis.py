"""Base-vs-capped comparisons and emission-cap sensitivity sweeps.

A sweep solves the capped model once per cap and records objective,
emissions, rental share and node count per row. Rows are written as CSV with
summary statistics in ``#`` trailer lines, ready for plotting cost against
cap and rental share against cap.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bnb import ILP_INFEASIBLE, ILP_OPTIMAL, SolveParams, solve_ilp
from .ilp import build_ilp, emission_objective
from .model import DEFAULT_OPTIONS, Variant
from .solve import solve_instance

CSV_HEADER = "cap,status,objective,emissions,rental_share,nodes"


class AnalysisError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepRow:
    cap: float
    status: str
    objective: float
    emissions: float
    rental_share: float
    nodes: int

    @property
    def feasible(self):
        return self.status == ILP_OPTIMAL


@dataclass
class SweepResult:
    rows: list
    base_objective: float
    base_emissions: float
    mean_cost_increase_pct: float
    min_feasible_cap: float | None
    base_rental_share: float = math.nan
    notes: list = field(default_factory=list)

    def objectives(self):
        return [r.objective for r in self.rows]

    def to_csv(self):
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in self.rows:
            vals = [_fmt(r.cap), r.status]
            if r.feasible:
                vals += [_fmt(r.objective), _fmt(r.emissions), _fmt(r.rental_share)]
            else:
                vals += ["", "", ""]
            vals.append(str(r.nodes))
            buf.write(",".join(vals) + "\n")
        buf.write(f"# base_objective={_fmt(self.base_objective)}\n")
        buf.write(f"# base_emissions={_fmt(self.base_emissions)}\n")
        buf.write(f"# mean_cost_increase_pct={_fmt(self.mean_cost_increase_pct)}\n")
        mfc = "" if self.min_feasible_cap is None else _fmt(self.min_feasible_cap)
        buf.write(f"# min_feasible_cap={mfc}\n")
        for note in self.notes:
            buf.write(f"# {note}\n")
        return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def read_sweep_csv(text):
    """Parse sweep CSV back into rows (dicts) and the trailer summary."""
    rows, summary = [], {}
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("not a sweep CSV")
    keys = CSV_HEADER.split(",")
    for ln in lines[1:]:
        if ln.startswith("#"):
            k, _, v = ln[1:].strip().partition("=")
            summary[k] = v
            continue
        rec = dict(zip(keys, ln.split(",")))
        rows.append(rec)
    return rows, summary


def cost_delta_percent(base_objective, enhanced_objective):
    """Percentage cost increase of the capped solution over the uncapped one."""
    if not base_objective > 0:
        raise ValueError("base objective must be positive")
    return 100.0 * (enhanced_objective - base_objective) / base_objective


def min_emissions(instance, params=None, options=DEFAULT_OPTIONS):
    """Smallest network CO2 achievable under the fleet, demand, budget and link constraints.

    Returns ``None`` when those constraints have no integer solution.
    """
    problem, vmap = build_ilp(instance.with_cap(None), Variant.BASE, options)
    res = solve_ilp(problem.with_objective(emission_objective(instance, vmap)), params or SolveParams())
    if res.status != ILP_OPTIMAL:
        if res.status == ILP_INFEASIBLE:
            return None
        raise AnalysisError(f"emission minimization ended with status {res.status}")
    return float(res.objective)


def cap_grid(instance, n, params=None, options=DEFAULT_OPTIONS):
    """``n`` evenly spaced caps from the least achievable emissions up to the
    emissions of the uncapped optimum (inclusive)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    low = min_emissions(instance, params, options)
    if low is None:
        raise AnalysisError("base model is infeasible")
    base = solve_instance(instance.with_cap(None), Variant.BASE, params, options)
    if not base.feasible:
        raise AnalysisError(f"base solve failed: {base.status}")
    high = max(base.emissions, low)
    return [float(c) for c in np.linspace(low, high, n)]


def _solve_cap(args):
    instance, cap, params, options = args
    rep = solve_instance(instance.with_cap(cap), Variant.ENHANCED, params, options)
    return SweepRow(cap, rep.status, rep.objective, rep.emissions, rep.rental_share, rep.nodes)


def sweep_emission_cap(instance, caps, params=None, options=DEFAULT_OPTIONS, workers=1):
    """Solve the capped model for every cap; rows come back sorted by cap.

    A failed solve is recorded in its row and never stops the sweep.
    """
    caps = sorted(float(c) for c in caps)
    if not caps:
        raise ValueError("caps must be nonempty")
    params = params or SolveParams()
    base = solve_instance(instance.with_cap(None), Variant.BASE, params, options)
    jobs = [(instance, cap, params, options) for cap in caps]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_solve_cap, jobs))
    else:
        rows = [_solve_cap(job) for job in jobs]

    feasible = [r for r in rows if r.feasible]
    notes = []
    if base.feasible and base.objective > 0 and feasible:
        mean = float(np.mean([cost_delta_percent(base.objective, r.objective) for r in feasible]))
    else:
        mean = math.nan
        notes.append("mean_cost_increase_pct undefined (no feasible rows or nonpositive base objective)")
    return SweepResult(
        rows=rows,
        base_objective=base.objective,
        base_emissions=base.emissions,
        mean_cost_increase_pct=mean,
        min_feasible_cap=feasible[0].cap if feasible else None,
        base_rental_share=base.rental_share,
        notes=notes,
    )


def compare_variants(instance, cap, params=None, options=DEFAULT_OPTIONS):
    """Uncapped and capped solves side by side, with the percentage cost change."""
    base = solve_instance(instance.with_cap(None), Variant.BASE, params, options)
    enh = solve_instance(instance.with_cap(cap), Variant.ENHANCED, params, options)
    delta = math.nan
    if base.feasible and enh.feasible and base.objective > 0:
        delta = cost_delta_percent(base.objective, enh.objective)
    return {"base": base, "enhanced": enh, "cost_delta_pct": delta}
