"""JSON serialization of instances and solutions.

Instance files (schema ``fleetcap.instance/1``)::

    {
      "schema": "fleetcap.instance/1",
      "dims": {"I": 2, "J": 3, "M": 2, "T": 2},
      "fleet_cap": [[[...]]],          # [i][m][t]
      "demand": [[[[...]]]],           # [i][j][m][t]
      ...
      "budget": 12000.0,
      "emission_cap": null             # null => base model
    }

Every parameter listed in ``model.PARAMETER_FIELDS`` is a nested list in
index order. Solution files (``fleetcap.solution/1``) carry ``dims`` and the
six decision arrays ``x, xr, y, yr, q, qr``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .model import PARAMETER_FIELDS, SOLUTION_FIELDS, Dimensions, Instance, Solution

INSTANCE_SCHEMA = "fleetcap.instance/1"
SOLUTION_SCHEMA = "fleetcap.solution/1"


class SchemaError(ValueError):
    pass


def _tolist(arr):
    arr = np.asarray(arr)
    if arr.dtype.kind in "iu":
        return arr.tolist()
    return [_tolist(a) for a in arr] if arr.ndim > 1 else [float(v) for v in arr]


def instance_to_dict(instance):
    out = {"schema": INSTANCE_SCHEMA, "dims": instance.dims.as_dict()}
    for name, _, _ in PARAMETER_FIELDS:
        out[name] = _tolist(getattr(instance, name))
    out["budget"] = instance.budget
    cap = instance.emission_cap
    out["emission_cap"] = None if cap is None or math.isinf(cap) else cap
    return out


def instance_from_dict(data):
    schema = data.get("schema", INSTANCE_SCHEMA)
    if schema != INSTANCE_SCHEMA:
        raise SchemaError(f"unsupported instance schema {schema!r}")
    try:
        dims = Dimensions(**{k: int(data["dims"][k]) for k in "IJMT"})
        kwargs = {name: data[name] for name, _, _ in PARAMETER_FIELDS}
        budget = data["budget"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"missing or malformed field: {exc}") from exc
    return Instance(dims=dims, budget=budget, emission_cap=data.get("emission_cap"), **kwargs)


def solution_to_dict(solution):
    I, J, M, T = solution.x.shape
    out = {"schema": SOLUTION_SCHEMA, "dims": {"I": I, "J": J, "M": M, "T": T}}
    for name in SOLUTION_FIELDS:
        out[name] = getattr(solution, name).tolist()
    return out


def solution_from_dict(data):
    schema = data.get("schema", SOLUTION_SCHEMA)
    if schema != SOLUTION_SCHEMA:
        raise SchemaError(f"unsupported solution schema {schema!r}")
    try:
        return Solution(**{name: data[name] for name in SOLUTION_FIELDS})
    except KeyError as exc:
        raise SchemaError(f"missing field: {exc}") from exc


def dumps(obj):
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def save_instance(instance, path):
    Path(path).write_text(dumps(instance_to_dict(instance)), encoding="utf-8")


def load_instance(path):
    return instance_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_solution(solution, path):
    Path(path).write_text(dumps(solution_to_dict(solution)), encoding="utf-8")


def load_solution(path):
    return solution_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
