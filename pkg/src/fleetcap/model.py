"""Domain types for the multi-modal fleet-assignment model and solution evaluation.

Index conventions follow the model throughout: ``i`` origin, ``j`` destination,
``m`` vehicle mode, ``t`` period. Arrays are stored as numpy arrays in that
axis order (``[i][j][m][t]`` or the applicable subset).

Note that demand (vehicles required on route i-j) and distance (km between
i and j) are kept in separate fields, ``demand`` and ``distance``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-6


class DimensionError(ValueError):
    """Array extents disagree with the instance dimensions."""


class ConfigurationError(ValueError):
    """A variant or option was requested that the instance cannot support."""


class Variant(str, enum.Enum):
    BASE = "base"
    ENHANCED = "enhanced"


@dataclass(frozen=True)
class ModelOptions:
    """Switches for formulation choices left open by the model statement.

    per_mode_demand
        Cover demand per (j, m, t) instead of aggregating over origins and
        modes per (j, t).
    bound_service
        Add q <= V and qr <= Vr.
    """

    per_mode_demand: bool = False
    bound_service: bool = False


DEFAULT_OPTIONS = ModelOptions()


@dataclass(frozen=True)
class Dimensions:
    I: int
    J: int
    M: int
    T: int

    def __post_init__(self):
        for name in ("I", "J", "M", "T"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DimensionError(f"{name} must be a positive integer, got {v!r}")

    @property
    def route_shape(self):
        return (self.I, self.J, self.M, self.T)

    @property
    def origin_shape(self):
        return (self.I, self.M, self.T)

    def as_dict(self):
        return {"I": self.I, "J": self.J, "M": self.M, "T": self.T}


def _frozen_array(value, shape, name, dtype=float):
    arr = np.array(value, dtype=dtype)
    if arr.shape != tuple(shape):
        raise DimensionError(f"{name}: expected shape {tuple(shape)}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


# (field name, shape key, integer valued)
PARAMETER_FIELDS = (
    ("fleet_cap", "imt", True),
    ("rental_cap", "imt", True),
    ("demand", "ijmt", True),
    ("stop_cost_org", "imt", False),
    ("stop_cost_rent", "imt", False),
    ("travel_cost_org", "ijmt", False),
    ("travel_cost_rent", "ijmt", False),
    ("op_cost", "imt", False),
    ("rent_cost", "imt", False),
    ("emission_org", "m", False),
    ("emission_rent", "m", False),
    ("distance", "ij", False),
)


def _shape_for(key, dims):
    return tuple({"i": dims.I, "j": dims.J, "m": dims.M, "t": dims.T}[c] for c in key)


@dataclass(frozen=True)
class Instance:
    """All parameters of one model instance.

    ``emission_cap`` is ``None`` for the base model. ``math.inf`` is accepted
    as an explicit "no cap" sentinel for the enhanced variant.
    """

    dims: Dimensions
    fleet_cap: np.ndarray
    rental_cap: np.ndarray
    demand: np.ndarray
    stop_cost_org: np.ndarray
    stop_cost_rent: np.ndarray
    travel_cost_org: np.ndarray
    travel_cost_rent: np.ndarray
    budget: float
    op_cost: np.ndarray
    rent_cost: np.ndarray
    emission_org: np.ndarray
    emission_rent: np.ndarray
    distance: np.ndarray
    emission_cap: float | None = None

    def __post_init__(self):
        for name, key, is_int in PARAMETER_FIELDS:
            raw = np.asarray(getattr(self, name), dtype=float)
            arr = _frozen_array(raw, _shape_for(key, self.dims), name)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: entries must be finite")
            if np.any(arr < 0):
                raise ValueError(f"{name}: entries must be >= 0")
            if is_int:
                if np.any(arr != np.round(arr)):
                    raise ValueError(f"{name}: entries must be integers")
                arr = _frozen_array(arr, arr.shape, name, dtype=np.int64)
            object.__setattr__(self, name, arr)
        budget = float(self.budget)
        if not math.isfinite(budget) or budget < 0:
            raise ValueError("budget must be finite and >= 0")
        object.__setattr__(self, "budget", budget)
        if self.emission_cap is not None:
            cap = float(self.emission_cap)
            if math.isnan(cap) or cap < 0:
                raise ValueError("emission_cap must be >= 0")
            object.__setattr__(self, "emission_cap", cap)

    def with_cap(self, cap):
        """Copy of this instance with a different emission cap."""
        return Instance(**{**self.__dict__, "emission_cap": cap})

    def replace(self, **changes):
        return Instance(**{**self.__dict__, **changes})

    def route_emission_factors(self):
        """Per-trip emissions (kg) for org and rental vehicles, shape (I, J, M)."""
        dist = self.distance[:, :, None]
        return dist * self.emission_org[None, None, :], dist * self.emission_rent[None, None, :]

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.budget == other.budget
            and self.emission_cap == other.emission_cap
            and all(np.array_equal(getattr(self, name), getattr(other, name)) for name, _, _ in PARAMETER_FIELDS)
        )

    __hash__ = None


SOLUTION_FIELDS = ("x", "xr", "y", "yr", "q", "qr")


@dataclass(frozen=True)
class Solution:
    x: np.ndarray
    xr: np.ndarray
    y: np.ndarray
    yr: np.ndarray
    q: np.ndarray
    qr: np.ndarray

    def __post_init__(self):
        for name in SOLUTION_FIELDS:
            raw = np.asarray(getattr(self, name))
            if raw.dtype.kind == "f":
                if not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)):
                    raise ValueError(f"{name}: entries must be integers")
            arr = np.array(raw, dtype=np.int64)
            if np.any(arr < 0):
                raise ValueError(f"{name}: entries must be >= 0")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.x.ndim != 4 or self.xr.shape != self.x.shape:
            raise DimensionError("x and xr must be 4-d arrays of equal shape")
        I, _, M, T = self.x.shape
        for name in ("y", "yr", "q", "qr"):
            if getattr(self, name).shape != (I, M, T):
                raise DimensionError(f"{name}: expected shape {(I, M, T)}")

    @classmethod
    def zeros(cls, dims):
        r = np.zeros(dims.route_shape, dtype=np.int64)
        o = np.zeros(dims.origin_shape, dtype=np.int64)
        return cls(r, r, o, o, o, o)

    @classmethod
    def from_trips(cls, instance, x, xr):
        """Complete a trip assignment with the idle and in-service counts it implies.

        y = V - sum_j x and q = sum_j x (likewise for rentals). Raises if the
        trips exceed the available fleet.
        """
        x = np.asarray(x, dtype=np.int64)
        xr = np.asarray(xr, dtype=np.int64)
        q = x.sum(axis=1)
        qr = xr.sum(axis=1)
        return cls(x, xr, instance.fleet_cap - q, instance.rental_cap - qr, q, qr)

    def replace(self, **changes):
        return Solution(**{**{k: getattr(self, k) for k in SOLUTION_FIELDS}, **changes})

    def __eq__(self, other):
        if not isinstance(other, Solution):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in SOLUTION_FIELDS)

    __hash__ = None


@dataclass(frozen=True)
class Violation:
    constraint_id: str
    index: tuple
    lhs: float
    rhs: float
    sense: str

    def __str__(self):
        idx = ",".join(str(k + 1) for k in self.index)
        where = f"[{idx}]" if idx else ""
        return f"{self.constraint_id}{where}: {self.lhs:g} {self.sense} {self.rhs:g} violated"


def _check_shapes(instance, solution):
    dims = instance.dims
    if solution.x.shape != dims.route_shape or solution.y.shape != dims.origin_shape:
        raise DimensionError(
            f"solution shape {solution.x.shape} does not match instance dims {dims.route_shape}"
        )


def objective_terms(instance, solution):
    """The six cost groups of the objective, in order (CT.x, CTr.xr, CS.y, CSr.yr, OPR.q, Rent.qr)."""
    _check_shapes(instance, solution)
    pairs = (
        (instance.travel_cost_org, solution.x),
        (instance.travel_cost_rent, solution.xr),
        (instance.stop_cost_org, solution.y),
        (instance.stop_cost_rent, solution.yr),
        (instance.op_cost, solution.q),
        (instance.rent_cost, solution.qr),
    )
    # ravel in C order keeps the summation order fixed (i, j, m, t)
    return tuple(float(np.dot(c.ravel(), v.ravel().astype(float))) for c, v in pairs)


def evaluate_objective(instance, solution):
    """Total cost of ``solution``: travel, stopping, operating and rental terms."""
    return math.fsum(objective_terms(instance, solution))


def total_emissions(instance, solution):
    """Network CO2 (kg) of all trips, organizational and rental."""
    _check_shapes(instance, solution)
    e_org, e_rent = instance.route_emission_factors()
    org = np.einsum("ijm,ijmt->", e_org, solution.x.astype(float))
    rent = np.einsum("ijm,ijmt->", e_rent, solution.xr.astype(float))
    return float(org + rent)


def budget_usage(instance, solution):
    """Operating plus rental spend, i.e. the left-hand side of the budget constraint."""
    _check_shapes(instance, solution)
    return float(
        np.dot(instance.op_cost.ravel(), solution.q.ravel())
        + np.dot(instance.rent_cost.ravel(), solution.qr.ravel())
    )


def rental_share(solution):
    """Fraction of traveling vehicles that are rented; 0 when nothing travels."""
    org = int(solution.x.sum())
    rent = int(solution.xr.sum())
    if org + rent == 0:
        return 0.0
    return rent / (org + rent)


def _holds(lhs, rhs, sense, tol=FEAS_TOL):
    if sense == "=":
        return abs(lhs - rhs) <= tol
    if sense == "<=":
        return lhs <= rhs + tol
    return lhs >= rhs - tol


def check_feasible(instance, solution, variant=Variant.BASE, options=DEFAULT_OPTIONS):
    """List every violated constraint; an empty list means feasible.

    Constraints are evaluated one index tuple at a time so that each
    ``Violation`` carries the exact lhs/rhs that failed. Identifiers:

    ========  ==========================================================
    Eq2       owned vehicles: trips plus idle equal the fleet, per (i,m,t)
    Eq3       the same for rentals
    Eq4       trips into j cover demand, per (j,t) or (j,m,t)
    Eq5       operating plus rental spend within budget
    Eq6, Eq7  owned / rented trips within the in-service count
    Eq8       network emissions within the cap (capped variant only)
    QCap      in-service owned count within the fleet (``bound_service``)
    QrCap     the same for rentals
    ========  ==========================================================
    """
    variant = Variant(variant)
    _check_shapes(instance, solution)
    if variant is Variant.ENHANCED and instance.emission_cap is None:
        raise ConfigurationError("enhanced variant requires an emission cap")

    d = instance.dims
    x, xr, y, yr, q, qr = (getattr(solution, k) for k in SOLUTION_FIELDS)
    out = []

    def record(cid, idx, lhs, rhs, sense):
        lhs, rhs = float(lhs), float(rhs)
        if not _holds(lhs, rhs, sense):
            out.append(Violation(cid, idx, lhs, rhs, sense))

    for i in range(d.I):
        for m in range(d.M):
            for t in range(d.T):
                record("Eq2", (i, m, t), x[i, :, m, t].sum() + y[i, m, t], instance.fleet_cap[i, m, t], "=")
    for i in range(d.I):
        for m in range(d.M):
            for t in range(d.T):
                record("Eq3", (i, m, t), xr[i, :, m, t].sum() + yr[i, m, t], instance.rental_cap[i, m, t], "=")
    if options.per_mode_demand:
        for j in range(d.J):
            for m in range(d.M):
                for t in range(d.T):
                    lhs = x[:, j, m, t].sum() + xr[:, j, m, t].sum()
                    record("Eq4", (j, m, t), lhs, instance.demand[:, j, m, t].sum(), ">=")
    else:
        for j in range(d.J):
            for t in range(d.T):
                lhs = x[:, j, :, t].sum() + xr[:, j, :, t].sum()
                record("Eq4", (j, t), lhs, instance.demand[:, j, :, t].sum(), ">=")
    record("Eq5", (), budget_usage(instance, solution), instance.budget, "<=")
    for i in range(d.I):
        for m in range(d.M):
            for t in range(d.T):
                record("Eq6", (i, m, t), x[i, :, m, t].sum(), q[i, m, t], "<=")
    for i in range(d.I):
        for m in range(d.M):
            for t in range(d.T):
                record("Eq7", (i, m, t), xr[i, :, m, t].sum(), qr[i, m, t], "<=")
    if options.bound_service:
        for i in range(d.I):
            for m in range(d.M):
                for t in range(d.T):
                    record("QCap", (i, m, t), q[i, m, t], instance.fleet_cap[i, m, t], "<=")
                    record("QrCap", (i, m, t), qr[i, m, t], instance.rental_cap[i, m, t], "<=")
    if variant is Variant.ENHANCED and math.isfinite(instance.emission_cap):
        record("Eq8", (), total_emissions(instance, solution), instance.emission_cap, "<=")
    return out
