"""Seeded instance generation, the Texas preset and a loader for external data.

Each parameter family draws from its own PCG64 stream seeded by
``SeedSequence(seed, spawn_key=(crc32(family),))``. Streams are keyed by name,
not position, so adding a family never changes the draws of existing ones.
"""

from __future__ import annotations

import csv
import json
import zlib
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .io import instance_from_dict
from .model import Dimensions, Instance

MAX_DEMAND_RETRIES = 100


class GenerationError(ValueError):
    pass


def _stream(seed, family):
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(family.encode("utf-8")),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class GenSpec:
    """Recipe for a random instance.

    Ranges are inclusive ``(min, max)`` pairs. Integer families (capacities
    and demand) draw integers; the rest draw uniform reals. The defaults are
    this package's own choices.
    """

    dims: Dimensions
    seed: int = 0
    fleet_cap: tuple = (1, 4)
    rental_cap: tuple = (1, 4)
    demand: tuple = (0, 2)
    stop_cost_org: tuple = (20.0, 60.0)
    stop_cost_rent: tuple = (15.0, 45.0)
    travel_cost_org: tuple = (200.0, 600.0)
    travel_cost_rent: tuple = (250.0, 750.0)
    op_cost: tuple = (100.0, 250.0)
    rent_cost: tuple = (200.0, 400.0)
    distance: tuple = (50.0, 450.0)
    emission_org: tuple = (0.3, 1.2)
    rental_emission_ratio: float = 0.7
    budget_slack: float = 1.5
    emission_cap: float | None = None

    RANGE_FIELDS = (
        "fleet_cap", "rental_cap", "demand", "stop_cost_org", "stop_cost_rent",
        "travel_cost_org", "travel_cost_rent", "op_cost", "rent_cost", "distance",
        "emission_org",
    )

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for name in self.RANGE_FIELDS:
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise ValueError(f"{name}: need 0 <= min <= max, got ({lo}, {hi})")
            object.__setattr__(self, name, (lo, hi))
        if not 0 < self.rental_emission_ratio <= 1:
            raise ValueError("rental_emission_ratio must lie in (0, 1]")
        if self.budget_slack < 1:
            raise ValueError("budget_slack must be >= 1")

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        dims = data.pop("dims")
        if not isinstance(dims, Dimensions):
            dims = Dimensions(**{k: int(dims[k]) for k in "IJMT"})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown GenSpec fields: {sorted(unknown)}")
        for name in cls.RANGE_FIELDS:
            if name in data:
                data[name] = tuple(data[name])
        return cls(dims=dims, **data)


def _draw_int(rng, rng_range, shape):
    lo, hi = rng_range
    return rng.integers(int(lo), int(hi) + 1, size=shape)


def _draw_real(rng, rng_range, shape):
    lo, hi = rng_range
    return rng.uniform(lo, hi, size=shape)


def min_cover_budget(fleet_cap, rental_cap, op_cost, rent_cost, demand):
    """Least operating+rental spend that puts enough vehicles on the road.

    Per period, any vehicle can cover a unit of demand at any destination, so
    the cheapest cover takes the lowest-priced units first.
    """
    T = fleet_cap.shape[-1]
    total = 0.0
    for t in range(T):
        need = int(demand[..., t].sum())
        prices = np.concatenate([
            np.repeat(op_cost[..., t].ravel(), fleet_cap[..., t].ravel()),
            np.repeat(rent_cost[..., t].ravel(), rental_cap[..., t].ravel()),
        ])
        if need > len(prices):
            raise GenerationError(f"period {t + 1}: demand {need} exceeds fleet {len(prices)}")
        total += float(np.sort(prices, kind="stable")[:need].sum())
    return total


def generate(spec):
    """Build a reproducible ``Instance`` from ``spec``."""
    d = spec.dims
    imt = d.origin_shape
    seed = int(spec.seed)

    V = _draw_int(_stream(seed, "fleet_cap"), spec.fleet_cap, imt)
    Vr = _draw_int(_stream(seed, "rental_cap"), spec.rental_cap, imt)
    supply = (V + Vr).sum(axis=(0, 1))

    drng = _stream(seed, "demand")
    for _ in range(MAX_DEMAND_RETRIES):
        D = _draw_int(drng, spec.demand, d.route_shape)
        if np.all(D.sum(axis=(0, 1, 2)) <= supply):
            break
    else:
        raise GenerationError(
            f"demand exceeded fleet capacity in {MAX_DEMAND_RETRIES} draws; widen capacities or narrow demand"
        )

    CS = _draw_real(_stream(seed, "stop_cost_org"), spec.stop_cost_org, imt)
    CSr = _draw_real(_stream(seed, "stop_cost_rent"), spec.stop_cost_rent, imt)
    CT = _draw_real(_stream(seed, "travel_cost_org"), spec.travel_cost_org, d.route_shape)
    CTr = _draw_real(_stream(seed, "travel_cost_rent"), spec.travel_cost_rent, d.route_shape)
    OPR = _draw_real(_stream(seed, "op_cost"), spec.op_cost, imt)
    Rent = _draw_real(_stream(seed, "rent_cost"), spec.rent_cost, imt)

    dist = _draw_real(_stream(seed, "distance"), spec.distance, (d.I, d.J))
    if d.I == d.J:
        upper = np.triu(dist, k=1)
        dist = upper + upper.T
    E = _draw_real(_stream(seed, "emission_org"), spec.emission_org, (d.M,))
    Er = spec.rental_emission_ratio * E

    budget = spec.budget_slack * min_cover_budget(V, Vr, OPR, Rent, D)
    return Instance(
        dims=d, fleet_cap=V, rental_cap=Vr, demand=D,
        stop_cost_org=CS, stop_cost_rent=CSr,
        travel_cost_org=CT, travel_cost_rent=CTr,
        budget=budget, op_cost=OPR, rent_cost=Rent,
        emission_org=E, emission_rent=Er, distance=dist,
        emission_cap=spec.emission_cap,
    )


def texas_reference():
    return json.loads(resources.files("fleetcap").joinpath("data/texas.json").read_text(encoding="utf-8"))


def texas_spec(seed=0, periods=2, **overrides):
    base = dict(
        dims=Dimensions(5, 5, 3, periods), seed=seed,
        fleet_cap=(2, 5), rental_cap=(1, 4), demand=(0, 2),
        stop_cost_org=(40.0, 90.0), stop_cost_rent=(30.0, 70.0),
        op_cost=(150.0, 300.0), rent_cost=(250.0, 450.0),
        rental_emission_ratio=0.7, budget_slack=1.5,
    )
    base.update(overrides)
    return GenSpec(**base)


def texas_preset(seed=0, periods=2, **overrides):
    """Five Texas cities (Dallas, Houston, San Antonio, Austin, Fort Worth), three modes.

    Distances come from the bundled table; travel costs are distance times a
    per-km rate (scaled by mode, with +-10% noise) plus a handling charge,
    rentals costing 5-25% more per km. Emission factors are the bundled
    per-mode values; rentals get ``rental_emission_ratio`` of them.
    """
    ref = texas_reference()
    spec = texas_spec(seed, periods, **overrides)
    inst = generate(spec)
    d = spec.dims
    dist = np.array(ref["distance_km"], dtype=float)
    mult = np.array(ref["mode_cost_multiplier"])
    rate = ref["cost_per_km_usd"] * mult[None, None, :, None] * _stream(spec.seed, "texas_rate").uniform(
        0.9, 1.1, size=d.route_shape)
    markup = _stream(spec.seed, "texas_rent_markup").uniform(1.05, 1.25, size=d.route_shape)
    handling = ref["handling_cost_usd"]
    CT = dist[:, :, None, None] * rate + handling
    CTr = dist[:, :, None, None] * rate * markup + handling
    E = np.array(ref["emission_kg_per_km"], dtype=float)
    return inst.replace(
        distance=dist, travel_cost_org=CT, travel_cost_rent=CTr,
        emission_org=E, emission_rent=spec.rental_emission_ratio * E,
    )


# CSV file symbol -> Instance field
EXTERNAL_COLUMNS = {
    "V": "fleet_cap", "Vr": "rental_cap", "D": "demand",
    "CS": "stop_cost_org", "CSr": "stop_cost_rent",
    "CT": "travel_cost_org", "CTr": "travel_cost_rent",
    "OPR": "op_cost", "Rent": "rent_cost",
    "E": "emission_org", "Er": "emission_rent", "Dist": "distance",
}
_EXTERNAL_INDEX = {
    "fleet_cap": "imt", "rental_cap": "imt", "demand": "ijmt",
    "stop_cost_org": "imt", "stop_cost_rent": "imt",
    "travel_cost_org": "ijmt", "travel_cost_rent": "ijmt",
    "op_cost": "imt", "rent_cost": "imt",
    "emission_org": "m", "emission_rent": "m", "distance": "ij",
}


def load_external(path):
    """Load an instance supplied as either an instance JSON file or a CSV directory.

    CSV layout: one file per parameter named by its symbol (``V.csv``,
    ``CT.csv``, ...; see ``EXTERNAL_COLUMNS``), each with one-based index
    columns named ``i, j, m, t`` as applicable and a ``value`` column.
    ``scalars.csv`` holds ``name,value`` rows for ``TC`` and optionally
    ``EmissionCap``. Dimensions are inferred from the largest indices.
    Missing ``E``/``Er``/``Dist`` default to zero.
    """
    path = Path(path)
    if path.is_file():
        return instance_from_dict(json.loads(path.read_text(encoding="utf-8")))
    tables = {}
    for sym, name in EXTERNAL_COLUMNS.items():
        f = path / f"{sym}.csv"
        if f.exists():
            with f.open(newline="", encoding="utf-8") as fh:
                tables[name] = list(csv.DictReader(fh))
    if "fleet_cap" not in tables or "demand" not in tables:
        raise FileNotFoundError(f"{path}: need at least V.csv and D.csv")
    size = {"i": 1, "j": 1, "m": 1, "t": 1}
    for name, rows in tables.items():
        for row in rows:
            for k in _EXTERNAL_INDEX[name]:
                size[k] = max(size[k], int(row[k]))
    dims = Dimensions(size["i"], size["j"], size["m"], size["t"])
    arrays = {}
    for name, key in _EXTERNAL_INDEX.items():
        arr = np.zeros(tuple(size[k] for k in key))
        for row in tables.get(name, ()):
            arr[tuple(int(row[k]) - 1 for k in key)] = float(row["value"])
        arrays[name] = arr
    scalars = {}
    sfile = path / "scalars.csv"
    if sfile.exists():
        with sfile.open(newline="", encoding="utf-8") as fh:
            scalars = {r["name"]: float(r["value"]) for r in csv.DictReader(fh)}
    if "TC" not in scalars:
        raise FileNotFoundError(f"{path}: scalars.csv must define TC")
    return Instance(dims=dims, budget=scalars["TC"], emission_cap=scalars.get("EmissionCap"), **arrays)


__all__ = [
    "GenSpec", "GenerationError", "generate", "texas_preset", "texas_spec",
    "texas_reference", "load_external", "min_cover_budget",
]
