"""Exhaustive-enumeration ground truth for tiny instances.

Only the trip arrays x and xr are enumerated. Given them, the fleet balances
fix y = V - sum_j x and yr = Vr - sum_j xr, and because operating and rental
costs are nonnegative the cheapest admissible q, qr are q = sum_j x and
qr = sum_j xr. Every (i, m, t) block independently chooses how many of its
V trips go to each destination, so the search space is a Cartesian product
of per-block option lists. The product is walked in chunks with numpy; no
pruning is done.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from .model import (
    DEFAULT_OPTIONS,
    ConfigurationError,
    Solution,
    Variant,
    check_feasible,
    evaluate_objective,
)

DEFAULT_LIMIT = 10**6
_CHUNK = 1 << 16


class SearchSpaceTooLarge(ValueError):
    def __init__(self, size, limit):
        super().__init__(f"enumeration size {size} exceeds limit {limit}")
        self.size = size
        self.limit = limit


def _distributions(total, J):
    """All vectors of J nonnegative ints with sum <= total, lexicographic."""
    return [c for c in product(range(total + 1), repeat=J) if sum(c) <= total]


def enumeration_size(instance):
    """Exact number of (x, xr) assignments the oracle visits.

    Each block contributes C(V + J, J) * C(Vr + J, J) choices. Python integers
    do not overflow, so the count is exact however large.
    """
    J = instance.dims.J
    size = 1
    for v in instance.fleet_cap.ravel():
        size *= math.comb(int(v) + J, J)
    for v in instance.rental_cap.ravel():
        size *= math.comb(int(v) + J, J)
    return size


def _block_tables(instance, options):
    """Per-block option lists with each option's contribution to every aggregate."""
    d = instance.dims
    J = d.J
    e_org, e_rent = instance.route_emission_factors()
    if options.per_mode_demand:
        cover_keys = [(j, m, t) for j in range(J) for m in range(d.M) for t in range(d.T)]
    else:
        cover_keys = [(j, t) for j in range(J) for t in range(d.T)]
    cover_pos = {k: n for n, k in enumerate(cover_keys)}

    blocks = []
    for kind in ("x", "xr"):
        cap = instance.fleet_cap if kind == "x" else instance.rental_cap
        for i in range(d.I):
            for m in range(d.M):
                for t in range(d.T):
                    opts = np.array(_distributions(int(cap[i, m, t]), J), dtype=np.int64).reshape(-1, J)
                    used = opts.sum(axis=1)
                    if kind == "x":
                        travel = opts @ instance.travel_cost_org[i, :, m, t]
                        idle = (cap[i, m, t] - used) * instance.stop_cost_org[i, m, t]
                        service = used * instance.op_cost[i, m, t]
                        emis = opts @ e_org[i, :, m]
                    else:
                        travel = opts @ instance.travel_cost_rent[i, :, m, t]
                        idle = (cap[i, m, t] - used) * instance.stop_cost_rent[i, m, t]
                        service = used * instance.rent_cost[i, m, t]
                        emis = opts @ e_rent[i, :, m]
                    cover = np.zeros((len(opts), len(cover_keys)))
                    for j in range(J):
                        key = (j, m, t) if options.per_mode_demand else (j, t)
                        cover[:, cover_pos[key]] += opts[:, j]
                    blocks.append({
                        "kind": kind, "index": (i, m, t), "opts": opts,
                        "cost": travel + idle + service, "budget": service.astype(float),
                        "emis": emis, "cover": cover,
                    })
    demand = np.zeros(len(cover_keys))
    for key, n in cover_pos.items():
        if options.per_mode_demand:
            j, m, t = key
            demand[n] = instance.demand[:, j, m, t].sum()
        else:
            j, t = key
            demand[n] = instance.demand[:, j, :, t].sum()
    return blocks, demand


def _assemble(instance, blocks, choice):
    d = instance.dims
    x = np.zeros(d.route_shape, dtype=np.int64)
    xr = np.zeros(d.route_shape, dtype=np.int64)
    for blk, c in zip(blocks, choice):
        i, m, t = blk["index"]
        target = x if blk["kind"] == "x" else xr
        target[i, :, m, t] = blk["opts"][c]
    return Solution.from_trips(instance, x, xr)


def _flat_trips(sol):
    return tuple(sol.x.ravel().tolist()) + tuple(sol.xr.ravel().tolist())


def brute_force_solve(instance, variant=Variant.BASE, limit=DEFAULT_LIMIT, options=DEFAULT_OPTIONS):
    """Minimum-cost feasible solution by full enumeration, or ``None`` if infeasible.

    Returns ``(solution, objective)``. Ties go to the lexicographically
    smallest flattened (x, xr). Raises ``SearchSpaceTooLarge`` past ``limit``.
    """
    variant = Variant(variant)
    if variant is Variant.ENHANCED and instance.emission_cap is None:
        raise ConfigurationError("enhanced variant requires an emission cap")
    size = enumeration_size(instance)
    if size > limit:
        raise SearchSpaceTooLarge(size, limit)
    cap = instance.emission_cap if variant is Variant.ENHANCED else math.inf
    tol = 1e-6

    blocks, demand = _block_tables(instance, options)
    radices = [len(b["opts"]) for b in blocks]

    best = math.inf
    best_codes = []
    for start in range(0, size, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, size), dtype=np.int64)
        cost = np.zeros(len(codes))
        spend = np.zeros(len(codes))
        emis = np.zeros(len(codes))
        cover = np.zeros((len(codes), len(demand)))
        rem = codes.copy()
        # mixed-radix decode, last block varies fastest
        for blk, radix in zip(reversed(blocks), reversed(radices)):
            c = rem % radix
            rem //= radix
            cost += blk["cost"][c]
            spend += blk["budget"][c]
            emis += blk["emis"][c]
            cover += blk["cover"][c]
        ok = np.all(cover >= demand - tol, axis=1) & (spend <= instance.budget + tol)
        if math.isfinite(cap):
            ok &= emis <= cap + tol
        if not ok.any():
            continue
        feas_cost = np.where(ok, cost, math.inf)
        low = feas_cost.min()
        if low < best - 1e-9:
            best = low
            best_codes = []
        if low <= best + 1e-9:
            best_codes.extend(codes[feas_cost <= best + 1e-9].tolist())

    if not best_codes:
        return None

    candidates = []
    for code in best_codes:
        choice = []
        for radix in reversed(radices):
            choice.append(code % radix)
            code //= radix
        candidates.append(_assemble(instance, blocks, choice[::-1]))
    sol = min(candidates, key=_flat_trips)
    violations = check_feasible(instance, sol, variant, options)
    if violations:
        raise AssertionError(f"oracle winner failed the feasibility check: {violations}")
    return sol, evaluate_objective(instance, sol)
