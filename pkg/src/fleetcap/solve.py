"""Instance-level solve: build the ILP, run branch-and-bound, read the answer back."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bnb import ILP_INFEASIBLE, ILP_OPTIMAL, SolveParams, solve_ilp
from .ilp import build_ilp, extract_solution
from .model import (
    DEFAULT_OPTIONS,
    Variant,
    budget_usage,
    evaluate_objective,
    rental_share,
    total_emissions,
)


@dataclass(frozen=True)
class SolveReport:
    status: str
    variant: str
    solution: object
    objective: float
    emissions: float
    budget_usage: float
    rental_share: float
    nodes: int
    best_bound: float = math.nan
    message: str = ""

    @property
    def feasible(self):
        return self.solution is not None

    def as_dict(self):
        return {
            "status": self.status,
            "variant": self.variant,
            "objective": self.objective if self.feasible else None,
            "emissions": self.emissions if self.feasible else None,
            "budget_usage": self.budget_usage if self.feasible else None,
            "rental_share": self.rental_share if self.feasible else None,
            "nodes": self.nodes,
            "message": self.message,
        }


def solve_instance(instance, variant=Variant.BASE, params=None, options=DEFAULT_OPTIONS):
    variant = Variant(variant)
    problem, vmap = build_ilp(instance, variant, options)
    res = solve_ilp(problem, params or SolveParams())
    if res.x is None:
        return SolveReport(res.status, variant.value, None, math.nan, math.nan, math.nan, math.nan,
                           res.nodes, res.best_bound, res.message)
    sol = extract_solution(res.x, vmap)
    return SolveReport(
        res.status, variant.value, sol, evaluate_objective(instance, sol),
        total_emissions(instance, sol), budget_usage(instance, sol), rental_share(sol),
        res.nodes, res.best_bound, res.message,
    )


__all__ = ["SolveReport", "solve_instance", "ILP_OPTIMAL", "ILP_INFEASIBLE"]
