import numpy as np
import pytest

from fleetcap.generate import GenSpec, generate
from fleetcap.model import Dimensions, Instance, Solution
from fleetcap.oracle import enumeration_size

ONE = Dimensions(1, 1, 1, 1)


def make_t0(**overrides):
    """Tiny instance T0: one origin, destination, mode and period.

    V=2, Vr=1, demand 1, CS=10, CSr=8, CT=100, CTr=120, OPR=50, Rent=60,
    E=1.0, Er=0.7, Dist=100 km, budget 1000.
    """
    o = (1, 1, 1)
    r = (1, 1, 1, 1)
    base = dict(
        dims=ONE,
        fleet_cap=np.full(o, 2), rental_cap=np.full(o, 1), demand=np.full(r, 1),
        stop_cost_org=np.full(o, 10.0), stop_cost_rent=np.full(o, 8.0),
        travel_cost_org=np.full(r, 100.0), travel_cost_rent=np.full(r, 120.0),
        budget=1000.0, op_cost=np.full(o, 50.0), rent_cost=np.full(o, 60.0),
        emission_org=[1.0], emission_rent=[0.7], distance=[[100.0]],
    )
    base.update(overrides)
    return Instance(**base)


@pytest.fixture
def t0():
    return make_t0()


def small_random_instance(seed, limit=10**6, rho=0.7):
    """Seeded instance with dims up to 2x2x2x2 and capacities <= 3 whose
    enumeration size is within ``limit``. Deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    while True:
        dims = Dimensions(*(int(v) for v in rng.integers(1, 3, size=4)))
        spec = GenSpec(
            dims, seed=int(rng.integers(2**32)),
            fleet_cap=(0, 3), rental_cap=(0, 3), demand=(0, 1),
            rental_emission_ratio=rho,
        )
        try:
            inst = generate(spec)
        except ValueError:
            continue
        if enumeration_size(inst) <= limit:
            return inst


def random_assignment(inst, rng):
    """Either arbitrary small integers everywhere or trips within fleet limits
    with derived idle/service counts (sometimes padded)."""
    d = inst.dims
    if rng.random() < 0.5:
        return Solution(
            rng.integers(0, 3, d.route_shape), rng.integers(0, 3, d.route_shape),
            *(rng.integers(0, 4, d.origin_shape) for _ in range(4)),
        )
    x = np.zeros(d.route_shape, dtype=int)
    xr = np.zeros(d.route_shape, dtype=int)
    for i, m, t in np.ndindex(d.origin_shape):
        for _ in range(rng.integers(0, inst.fleet_cap[i, m, t] + 1)):
            x[i, rng.integers(d.J), m, t] += 1
        for _ in range(rng.integers(0, inst.rental_cap[i, m, t] + 1)):
            xr[i, rng.integers(d.J), m, t] += 1
    s = Solution.from_trips(inst, x, xr)
    if rng.random() < 0.3:
        s = s.replace(q=s.q + rng.integers(0, 2, d.origin_shape))
    return s
